//! Genes as non-overlapping subexons, isoforms as subexon index lists.
//!
//! Coordinates are 1-based and inclusive on the forward strand. Subexon and
//! isoform indices are 0-based in the Rust API; the JSON interchange formats
//! use 1-based subexon indices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenomicInterval {
    pub start: u64,
    pub end: u64,
}

impl GenomicInterval {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start > end {
            return Err(Error::InvalidInput(format!(
                "interval start {start} exceeds end {end}"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> u64 {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, pos: u64) -> bool {
        self.start <= pos && pos <= self.end
    }

    pub fn intersects(&self, other: &GenomicInterval) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isoform {
    pub isoform_id: String,
    /// Strictly increasing 0-based subexon indices.
    pub subexon_indices: Vec<usize>,
}

/// A gene: sorted, pairwise disjoint subexons plus isoforms built from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneModel {
    gene_id: String,
    subexons: Vec<GenomicInterval>,
    isoforms: Vec<Isoform>,
}

impl GeneModel {
    pub fn new(
        gene_id: impl Into<String>,
        subexons: Vec<GenomicInterval>,
        isoforms: Vec<Isoform>,
    ) -> Result<Self> {
        let gene_id = gene_id.into();
        if subexons.is_empty() {
            return Err(Error::MalformedAnnotation(format!("{gene_id}: no subexons")));
        }
        if isoforms.is_empty() {
            return Err(Error::MalformedAnnotation(format!("{gene_id}: no isoforms")));
        }
        for pair in subexons.windows(2) {
            if pair[0].end >= pair[1].start {
                return Err(Error::MalformedAnnotation(format!(
                    "{gene_id}: subexons {:?} and {:?} overlap or are unsorted",
                    pair[0], pair[1]
                )));
            }
        }
        for iso in &isoforms {
            if iso.subexon_indices.is_empty() {
                return Err(Error::MalformedAnnotation(format!(
                    "{gene_id}: isoform {} has no subexons",
                    iso.isoform_id
                )));
            }
            if iso.subexon_indices.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::MalformedAnnotation(format!(
                    "{gene_id}: isoform {} subexon indices not strictly increasing",
                    iso.isoform_id
                )));
            }
            if let Some(&bad) = iso.subexon_indices.iter().find(|&&k| k >= subexons.len()) {
                return Err(Error::IndexOutOfRange {
                    index: bad,
                    len: subexons.len(),
                });
            }
        }
        Ok(Self {
            gene_id,
            subexons,
            isoforms,
        })
    }

    pub fn gene_id(&self) -> &str {
        &self.gene_id
    }

    pub fn subexons(&self) -> &[GenomicInterval] {
        &self.subexons
    }

    pub fn isoforms(&self) -> &[Isoform] {
        &self.isoforms
    }

    pub fn num_subexons(&self) -> usize {
        self.subexons.len()
    }

    pub fn num_isoforms(&self) -> usize {
        self.isoforms.len()
    }

    pub fn isoform(&self, j: usize) -> Result<&Isoform> {
        self.isoforms.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            len: self.isoforms.len(),
        })
    }

    /// Summed length of the isoform's subexons.
    pub fn isoform_length(&self, j: usize) -> Result<u64> {
        let iso = self.isoform(j)?;
        Ok(iso
            .subexon_indices
            .iter()
            .map(|&k| self.subexons[k].len())
            .sum())
    }

    /// Index of the subexon containing `pos`, if any.
    pub fn subexon_at(&self, pos: u64) -> Option<usize> {
        let k = self.subexons.partition_point(|s| s.end < pos);
        (k < self.subexons.len() && self.subexons[k].contains(pos)).then_some(k)
    }

    /// 1-based position of genomic `pos` along isoform `j`, or `None` when
    /// `pos` is not part of the isoform.
    pub fn transcript_position(&self, j: usize, pos: u64) -> Option<u64> {
        let iso = self.isoforms.get(j)?;
        let mut offset = 0;
        for &k in &iso.subexon_indices {
            let s = &self.subexons[k];
            if s.contains(pos) {
                return Some(offset + (pos - s.start) + 1);
            }
            offset += s.len();
        }
        None
    }

    /// Inverse of [`GeneModel::transcript_position`].
    pub fn genomic_position(&self, j: usize, tpos: u64) -> Option<u64> {
        let iso = self.isoforms.get(j)?;
        if tpos == 0 {
            return None;
        }
        let mut remaining = tpos;
        for &k in &iso.subexon_indices {
            let s = &self.subexons[k];
            if remaining <= s.len() {
                return Some(s.start + remaining - 1);
            }
            remaining -= s.len();
        }
        None
    }

    /// Genomic blocks covered by transcript positions `from..=to` of isoform `j`.
    pub fn genomic_blocks(&self, j: usize, from: u64, to: u64) -> Option<Vec<GenomicInterval>> {
        let iso = self.isoforms.get(j)?;
        if from == 0 || from > to {
            return None;
        }
        let mut blocks = Vec::new();
        let mut offset = 0;
        for &k in &iso.subexon_indices {
            let s = &self.subexons[k];
            let lo = offset + 1;
            let hi = offset + s.len();
            let a = from.max(lo);
            let b = to.min(hi);
            if a <= b {
                blocks.push(GenomicInterval {
                    start: s.start + (a - lo),
                    end: s.start + (b - lo),
                });
            }
            offset = hi;
        }
        (offset >= to).then_some(blocks)
    }

    /// Exon intervals of isoform `j`, with adjacent subexons merged.
    pub fn isoform_exons(&self, j: usize) -> Result<Vec<GenomicInterval>> {
        let iso = self.isoform(j)?;
        let mut exons: Vec<GenomicInterval> = Vec::new();
        for &k in &iso.subexon_indices {
            let s = self.subexons[k];
            match exons.last_mut() {
                Some(last) if last.end + 1 == s.start => last.end = s.end,
                _ => exons.push(s),
            }
        }
        Ok(exons)
    }
}

/// Number of possible fragment start positions, clamped below at 1.
pub fn effective_length(isoform_len: u64, mean_frag: f64) -> u64 {
    let l = isoform_len as f64 - mean_frag.round();
    if l < 1.0 {
        1
    } else {
        l as u64
    }
}

/// An isoform given as exon intervals, as found in an annotation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoformExons {
    pub isoform_id: String,
    pub exons: Vec<[u64; 2]>,
}

/// Exon-level gene annotation (input to [`derive_subexons`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneAnnotation {
    pub gene_id: String,
    pub isoforms: Vec<IsoformExons>,
}

/// Subexon-level gene, as emitted for reproducibility.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedGene {
    #[serde(default)]
    pub gene_id: String,
    pub subexons: Vec<[u64; 2]>,
    pub isoforms: Vec<DerivedIsoform>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedIsoform {
    pub isoform_id: String,
    /// 1-based.
    pub subexon_indices: Vec<usize>,
}

/// Splits the exons of all isoforms at every splice boundary so that each
/// isoform becomes a union of whole subexons.
pub fn derive_subexons(annotation: &GeneAnnotation) -> Result<GeneModel> {
    let gene_id = &annotation.gene_id;
    if annotation.isoforms.is_empty() {
        return Err(Error::MalformedAnnotation(format!("{gene_id}: no isoforms")));
    }
    let mut per_isoform: Vec<Vec<GenomicInterval>> = Vec::with_capacity(annotation.isoforms.len());
    for iso in &annotation.isoforms {
        if iso.exons.is_empty() {
            return Err(Error::MalformedAnnotation(format!(
                "{gene_id}: isoform {} has no exons",
                iso.isoform_id
            )));
        }
        let mut exons = iso
            .exons
            .iter()
            .map(|&[s, e]| GenomicInterval::new(s, e))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::MalformedAnnotation(format!("{gene_id}: {e}")))?;
        exons.sort();
        if exons.windows(2).any(|w| w[0].end >= w[1].start) {
            return Err(Error::MalformedAnnotation(format!(
                "{gene_id}: isoform {} has overlapping exons",
                iso.isoform_id
            )));
        }
        per_isoform.push(exons);
    }

    // Every exon start s and every exon end e contributes a cut before s and after e.
    let mut cuts: Vec<u64> = per_isoform
        .iter()
        .flatten()
        .flat_map(|iv| [iv.start, iv.end + 1])
        .collect();
    cuts.sort_unstable();
    cuts.dedup();

    let covered = |pos: u64| per_isoform.iter().flatten().any(|iv| iv.contains(pos));
    let subexons: Vec<GenomicInterval> = cuts
        .windows(2)
        .filter(|w| covered(w[0]))
        .map(|w| GenomicInterval {
            start: w[0],
            end: w[1] - 1,
        })
        .collect();

    let mut isoforms = Vec::with_capacity(per_isoform.len());
    for (iso, exons) in annotation.isoforms.iter().zip(&per_isoform) {
        let mut indices = Vec::new();
        for exon in exons {
            let first = subexons.partition_point(|s| s.end < exon.start);
            let mut k = first;
            let mut next = exon.start;
            while k < subexons.len() && subexons[k].start <= exon.end {
                if subexons[k].start != next || subexons[k].end > exon.end {
                    break;
                }
                next = subexons[k].end + 1;
                indices.push(k);
                k += 1;
            }
            if next != exon.end + 1 {
                return Err(Error::MalformedAnnotation(format!(
                    "{gene_id}: exon [{}, {}] of isoform {} is not a union of subexons",
                    exon.start, exon.end, iso.isoform_id
                )));
            }
        }
        isoforms.push(Isoform {
            isoform_id: iso.isoform_id.clone(),
            subexon_indices: indices,
        });
    }
    GeneModel::new(gene_id.clone(), subexons, isoforms)
}

impl From<&GeneModel> for DerivedGene {
    fn from(gene: &GeneModel) -> Self {
        DerivedGene {
            gene_id: gene.gene_id.clone(),
            subexons: gene.subexons.iter().map(|s| [s.start, s.end]).collect(),
            isoforms: gene
                .isoforms
                .iter()
                .map(|iso| DerivedIsoform {
                    isoform_id: iso.isoform_id.clone(),
                    subexon_indices: iso.subexon_indices.iter().map(|k| k + 1).collect(),
                })
                .collect(),
        }
    }
}

impl TryFrom<&DerivedGene> for GeneModel {
    type Error = Error;

    fn try_from(d: &DerivedGene) -> Result<Self> {
        let subexons = d
            .subexons
            .iter()
            .map(|&[s, e]| GenomicInterval::new(s, e))
            .collect::<Result<Vec<_>>>()?;
        let isoforms = d
            .isoforms
            .iter()
            .map(|iso| {
                let subexon_indices = iso
                    .subexon_indices
                    .iter()
                    .map(|&k| {
                        k.checked_sub(1).ok_or_else(|| {
                            Error::MalformedAnnotation("subexon indices are 1-based".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Isoform {
                    isoform_id: iso.isoform_id.clone(),
                    subexon_indices,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        GeneModel::new(d.gene_id.clone(), subexons, isoforms)
    }
}

impl From<&GeneModel> for GeneAnnotation {
    fn from(gene: &GeneModel) -> Self {
        GeneAnnotation {
            gene_id: gene.gene_id.clone(),
            isoforms: (0..gene.num_isoforms())
                .map(|j| IsoformExons {
                    isoform_id: gene.isoforms[j].isoform_id.clone(),
                    exons: gene
                        .isoform_exons(j)
                        .expect("index in range")
                        .iter()
                        .map(|e| [e.start, e.end])
                        .collect(),
                })
                .collect(),
        }
    }
}
