//! Paired-end read summaries, read/isoform compatibility and generating
//! probabilities.
//!
//! A read is kept as the union of two summaries: the sets of subexons touched
//! by each end, and the first/last genomic position of each end. The subexon
//! sets decide which isoforms could have produced the read; the positions give
//! the implied fragment length under each of those isoforms.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gene_model::{effective_length, GeneModel, GenomicInterval};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummarizedRead {
    pub read_id: String,
    /// Sorted 0-based subexon indices overlapped by the left end.
    pub s1: Vec<usize>,
    /// Sorted 0-based subexon indices overlapped by the right end.
    pub s2: Vec<usize>,
    pub y_first: u64,
    pub y_left_last: u64,
    pub y_right_first: u64,
    pub y_last: u64,
    /// Number of bases covered by the left end.
    pub half_length: u64,
}

impl SummarizedRead {
    /// Checks the summary against `gene`: non-empty sorted index sets, ordered
    /// positions, and each boundary position inside the matching extreme subexon.
    pub fn validate(&self, gene: &GeneModel) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("read {}: {msg}", self.read_id)));
        if self.s1.is_empty() || self.s2.is_empty() {
            return bad("empty subexon set");
        }
        for s in [&self.s1, &self.s2] {
            if s.windows(2).any(|w| w[0] >= w[1]) {
                return bad("subexon set not strictly increasing");
            }
            if let Some(&k) = s.iter().find(|&&k| k >= gene.num_subexons()) {
                return Err(Error::IndexOutOfRange {
                    index: k,
                    len: gene.num_subexons(),
                });
            }
        }
        if !(self.y_first <= self.y_left_last
            && self.y_left_last <= self.y_right_first
            && self.y_right_first <= self.y_last)
        {
            return bad("boundary positions out of order");
        }
        let checks = [
            (self.y_first, self.s1[0]),
            (self.y_left_last, *self.s1.last().unwrap()),
            (self.y_right_first, self.s2[0]),
            (self.y_last, *self.s2.last().unwrap()),
        ];
        for (pos, k) in checks {
            match gene.subexon_at(pos) {
                None => return Err(Error::UnmappablePosition(pos)),
                Some(found) if found != k => {
                    return bad("boundary position not in the expected subexon")
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

fn check_blocks(blocks: &[GenomicInterval], which: &str) -> Result<()> {
    if blocks.is_empty() {
        return Err(Error::InvalidInput(format!("{which} end covers no positions")));
    }
    if blocks.windows(2).any(|w| w[0].end >= w[1].start) {
        return Err(Error::InvalidInput(format!(
            "{which} end blocks are not sorted and disjoint"
        )));
    }
    Ok(())
}

/// Subexons touched by the blocks; every covered position must be exonic.
fn touched_subexons(blocks: &[GenomicInterval], gene: &GeneModel) -> Result<Vec<usize>> {
    let subexons = gene.subexons();
    let mut touched = Vec::new();
    for block in blocks {
        let mut k = subexons.partition_point(|s| s.end < block.start);
        let mut next = block.start;
        while k < subexons.len() && subexons[k].start <= block.end {
            if subexons[k].start > next {
                return Err(Error::UnmappablePosition(next));
            }
            if touched.last() != Some(&k) {
                touched.push(k);
            }
            next = subexons[k].end + 1;
            k += 1;
        }
        if next <= block.end {
            return Err(Error::UnmappablePosition(next));
        }
    }
    Ok(touched)
}

/// Summarizes the covered blocks of each read end against `gene`.
pub fn summarize_read(
    read_id: impl Into<String>,
    left: &[GenomicInterval],
    right: &[GenomicInterval],
    gene: &GeneModel,
) -> Result<SummarizedRead> {
    check_blocks(left, "left")?;
    check_blocks(right, "right")?;
    let y_first = left[0].start;
    let y_left_last = left[left.len() - 1].end;
    let y_right_first = right[0].start;
    let y_last = right[right.len() - 1].end;
    if y_left_last > y_right_first {
        return Err(Error::InvalidInput("left end does not precede right end".into()));
    }
    Ok(SummarizedRead {
        read_id: read_id.into(),
        s1: touched_subexons(left, gene)?,
        s2: touched_subexons(right, gene)?,
        y_first,
        y_left_last,
        y_right_first,
        y_last,
        half_length: left.iter().map(GenomicInterval::len).sum(),
    })
}

/// Positions of `set` within the isoform's subexon list, if all present and
/// consecutive there.
fn consecutive_in(set: &[usize], isoform: &[usize]) -> bool {
    let Ok(first) = isoform.binary_search(&set[0]) else {
        return false;
    };
    isoform.len() >= first + set.len() && isoform[first..first + set.len()] == *set
}

/// Whether isoform `j` could have produced `read`.
///
/// Each end must touch a run of subexons that is consecutive within the
/// isoform (so the end is contiguous in transcript coordinates), and the
/// whole fragment must lie inside the isoform.
pub fn is_compatible(read: &SummarizedRead, j: usize, gene: &GeneModel) -> bool {
    let Some(iso) = gene.isoforms().get(j) else {
        return false;
    };
    let idx = &iso.subexon_indices;
    if !consecutive_in(&read.s1, idx) || !consecutive_in(&read.s2, idx) {
        return false;
    }
    match (
        gene.transcript_position(j, read.y_first),
        gene.transcript_position(j, read.y_left_last),
        gene.transcript_position(j, read.y_right_first),
        gene.transcript_position(j, read.y_last),
    ) {
        (Some(a), Some(b), Some(c), Some(d)) => a <= b && b <= c && c <= d,
        _ => false,
    }
}

pub fn compatible_isoforms(read: &SummarizedRead, gene: &GeneModel) -> Vec<usize> {
    (0..gene.num_isoforms())
        .filter(|&j| is_compatible(read, j, gene))
        .collect()
}

/// Fragment length implied by `read` if it came from isoform `j`.
pub fn fragment_length(read: &SummarizedRead, j: usize, gene: &GeneModel) -> Result<u64> {
    gene.isoform(j)?;
    if !is_compatible(read, j, gene) {
        return Err(Error::Incompatible {
            read: read.read_id.clone(),
            isoform: j,
        });
    }
    let first = gene.transcript_position(j, read.y_first).unwrap();
    let last = gene.transcript_position(j, read.y_last).unwrap();
    Ok(last - first + 1)
}

/// Gaussian fragment-length distribution of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragmentLengthModel {
    pub mean: f64,
    pub sd: f64,
}

impl FragmentLengthModel {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite() && sd > 0.0 && sd.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "fragment length model needs positive mean and sd, got ({mean}, {sd})"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn ln_density(&self, len: f64) -> f64 {
        let z = (len - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - 0.5 * (2.0 * PI).ln()
    }

    pub fn density(&self, len: f64) -> f64 {
        self.ln_density(len).exp()
    }
}

/// Per-sample matrix of generating probabilities, reads by isoforms.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingMatrix {
    n_isoforms: usize,
    values: Vec<f64>,
}

impl GeneratingMatrix {
    /// Builds a matrix from rows; every row must have `n_isoforms` finite,
    /// non-negative entries with at least one positive.
    pub fn from_rows(n_isoforms: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if n_isoforms == 0 {
            return Err(Error::InvalidInput("generating matrix needs J >= 1".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_isoforms);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_isoforms {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} entries, expected {n_isoforms}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::InvalidInput(format!("row {i} has an invalid entry")));
            }
            if !row.iter().any(|&v| v > 0.0) {
                return Err(Error::ZeroRow { row: i });
            }
            values.extend_from_slice(row);
        }
        Ok(Self { n_isoforms, values })
    }

    /// A sample without reads.
    pub fn empty(n_isoforms: usize) -> Self {
        Self {
            n_isoforms,
            values: Vec::new(),
        }
    }

    pub fn n_reads(&self) -> usize {
        self.values.len() / self.n_isoforms
    }

    pub fn n_isoforms(&self) -> usize {
        self.n_isoforms
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_isoforms + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_isoforms..(i + 1) * self.n_isoforms]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_isoforms)
    }

    /// Row-wise concatenation in the given order.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a GeneratingMatrix>) -> Result<Self> {
        let mut out: Option<GeneratingMatrix> = None;
        for part in parts {
            match &mut out {
                None => out = Some(part.clone()),
                Some(acc) => {
                    if acc.n_isoforms != part.n_isoforms {
                        return Err(Error::InvalidInput(
                            "cannot concatenate matrices with different J".into(),
                        ));
                    }
                    acc.values.extend_from_slice(&part.values);
                }
            }
        }
        out.ok_or_else(|| Error::InvalidInput("nothing to concatenate".into()))
    }
}

/// Generating matrix of one sample together with which reads survived.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingOutput {
    pub matrix: GeneratingMatrix,
    /// Indices into the input read list, in input order, of the kept rows.
    pub kept: Vec<usize>,
    /// Indices of reads compatible with no isoform.
    pub dropped: Vec<usize>,
}

/// `h[i][j] = density(L_ij) / effective_length(l_j)` for compatible pairs,
/// zero otherwise; reads compatible with no isoform are dropped.
pub fn generating_matrix(
    reads: &[SummarizedRead],
    gene: &GeneModel,
    flm: &FragmentLengthModel,
) -> Result<GeneratingOutput> {
    let n_isoforms = gene.num_isoforms();
    let ln_eff: Vec<f64> = (0..n_isoforms)
        .map(|j| {
            let len = gene.isoform_length(j)?;
            Ok((effective_length(len, flm.mean) as f64).ln())
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(reads.len() * n_isoforms);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut row = vec![0.0; n_isoforms];
    for (i, read) in reads.iter().enumerate() {
        let mut any = false;
        for (j, h) in row.iter_mut().enumerate() {
            *h = if is_compatible(read, j, gene) {
                any = true;
                let len = fragment_length(read, j, gene)? as f64;
                // A compatible pair never gets an exact zero, even when the
                // density underflows.
                (flm.ln_density(len) - ln_eff[j]).exp().max(f64::MIN_POSITIVE)
            } else {
                0.0
            };
        }
        if any {
            values.extend_from_slice(&row);
            kept.push(i);
        } else {
            dropped.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::NoUsableReads);
    }
    Ok(GeneratingOutput {
        matrix: GeneratingMatrix { n_isoforms, values },
        kept,
        dropped,
    })
}

/// Sample mean and sd (n - 1 denominator, floored at 1 bp) of the fragment
/// lengths of reads from single-isoform genes.
pub fn estimate_fragment_params(
    single_isoform_reads: &[(SummarizedRead, &GeneModel)],
) -> Result<FragmentLengthModel> {
    if single_isoform_reads.len() < 2 {
        return Err(Error::InvalidInput(
            "fragment length estimation needs at least 2 reads".into(),
        ));
    }
    let mut lengths = Vec::with_capacity(single_isoform_reads.len());
    for (read, gene) in single_isoform_reads {
        if gene.num_isoforms() != 1 {
            return Err(Error::InvalidInput(format!(
                "gene {} has {} isoforms; fragment lengths need single-isoform genes",
                gene.gene_id(),
                gene.num_isoforms()
            )));
        }
        lengths.push(fragment_length(read, 0, gene)? as f64);
    }
    let n = lengths.len() as f64;
    let mean = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n - 1.0);
    FragmentLengthModel::new(mean, var.sqrt().max(1.0))
}

/// One row of a read TSV: either covered blocks or an existing summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadRecord {
    Raw {
        read_id: String,
        left: Vec<GenomicInterval>,
        right: Vec<GenomicInterval>,
    },
    Summarized(SummarizedRead),
}

impl ReadRecord {
    pub fn read_id(&self) -> &str {
        match self {
            ReadRecord::Raw { read_id, .. } => read_id,
            ReadRecord::Summarized(r) => &r.read_id,
        }
    }

    pub fn summarize(&self, gene: &GeneModel) -> Result<SummarizedRead> {
        match self {
            ReadRecord::Raw {
                read_id,
                left,
                right,
            } => summarize_read(read_id.clone(), left, right, gene),
            ReadRecord::Summarized(r) => {
                r.validate(gene)?;
                Ok(r.clone())
            }
        }
    }
}

fn parse_blocks(field: &str) -> std::result::Result<Vec<GenomicInterval>, String> {
    field
        .split(',')
        .map(|b| {
            let (s, e) = b
                .split_once('-')
                .ok_or_else(|| format!("block {b:?} is not start-end"))?;
            let s: u64 = s.trim().parse().map_err(|_| format!("bad position {s:?}"))?;
            let e: u64 = e.trim().parse().map_err(|_| format!("bad position {e:?}"))?;
            GenomicInterval::new(s, e).map_err(|e| e.to_string())
        })
        .collect()
}

fn parse_index_set(field: &str) -> std::result::Result<Vec<usize>, String> {
    let mut v = field
        .split(',')
        .map(|k| match k.trim().parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k - 1),
            _ => Err(format!("bad subexon index {k:?}")),
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Parses a read TSV. Rows with 3 columns are raw reads, rows with 7 or 8
/// columns are summaries. Lines starting with `#` and a `read_id` header are
/// skipped.
pub fn parse_read_tsv(text: &str, path: &str) -> Result<Vec<ReadRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') || line.starts_with("read_id\t") {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_string(),
            line: n + 1,
            msg,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let record = match cols.len() {
            3 => ReadRecord::Raw {
                read_id: cols[0].to_string(),
                left: parse_blocks(cols[1]).map_err(err)?,
                right: parse_blocks(cols[2]).map_err(err)?,
            },
            7 | 8 => {
                let pos = |s: &str| {
                    s.parse::<u64>()
                        .map_err(|_| err(format!("bad position {s:?}")))
                };
                let y_first = pos(cols[3])?;
                let y_left_last = pos(cols[4])?;
                let half_length = match cols.get(7) {
                    Some(c) => pos(c)?,
                    None => y_left_last.saturating_sub(y_first) + 1,
                };
                ReadRecord::Summarized(SummarizedRead {
                    read_id: cols[0].to_string(),
                    s1: parse_index_set(cols[1]).map_err(err)?,
                    s2: parse_index_set(cols[2]).map_err(err)?,
                    y_first,
                    y_left_last,
                    y_right_first: pos(cols[5])?,
                    y_last: pos(cols[6])?,
                    half_length,
                })
            }
            k => return Err(err(format!("expected 3, 7 or 8 columns, found {k}"))),
        };
        out.push(record);
    }
    Ok(out)
}

fn join_indices(set: &[usize]) -> String {
    set.iter()
        .map(|k| (k + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes summaries in the canonical TSV form (1-based subexon indices).
pub fn format_summarized_tsv(reads: &[SummarizedRead], header_comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(c) = header_comment {
        for line in c.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    out.push_str("read_id\ts1\ts2\ty_first\ty_left_last\ty_right_first\ty_last\thalf_length\n");
    for r in reads {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.read_id,
            join_indices(&r.s1),
            join_indices(&r.s2),
            r.y_first,
            r.y_left_last,
            r.y_right_first,
            r.y_last,
            r.half_length
        );
    }
    out
}
