// Summarize paired-end reads against a four-subexon gene and show which
// isoforms each read fits, with fragment lengths and generating
// probabilities.
//
// ```bash
// cargo run --example summarize_reads
// ```

use msiq::gene_model::{GeneModel, GenomicInterval, Isoform};
use msiq::read_model::{
    compatible_isoforms, fragment_length, generating_matrix, summarize_read, FragmentLengthModel,
    SummarizedRead,
};

fn iv(start: u64, end: u64) -> GenomicInterval {
    GenomicInterval { start, end }
}

pub fn fixture_gene() -> GeneModel {
    GeneModel::new(
        "fixture",
        vec![iv(1, 300), iv(350, 400), iv(450, 500), iv(510, 600)],
        vec![
            Isoform {
                isoform_id: "iso1".into(),
                subexon_indices: vec![0, 1, 3],
            },
            Isoform {
                isoform_id: "iso2".into(),
                subexon_indices: vec![0, 1, 2, 3],
            },
        ],
    )
    .expect("valid fixture")
}

pub fn fixture_reads(gene: &GeneModel) -> msiq::Result<Vec<SummarizedRead>> {
    Ok(vec![
        summarize_read("read1", &[iv(231, 280)], &[iv(510, 559)], gene)?,
        summarize_read("read2", &[iv(100, 199)], &[iv(460, 500), iv(510, 578)], gene)?,
        summarize_read(
            "read3",
            &[iv(50, 149)],
            &[iv(370, 400), iv(450, 500), iv(510, 537)],
            gene,
        )?,
    ])
}

pub fn run_example() -> Result<Vec<(SummarizedRead, Vec<usize>)>, Box<dyn std::error::Error>> {
    let gene = fixture_gene();
    let reads = fixture_reads(&gene)?;
    let one_based = |v: &[usize]| v.iter().map(|k| k + 1).collect::<Vec<_>>();
    let mut out = Vec::new();
    for r in &reads {
        let compat = compatible_isoforms(r, &gene);
        let lengths: Vec<u64> = compat
            .iter()
            .map(|&j| fragment_length(r, j, &gene))
            .collect::<msiq::Result<_>>()?;
        println!(
            "{}: y=({},{},{},{}) s1={:?} s2={:?} origins={:?} fragment lengths={:?}",
            r.read_id,
            r.y_first,
            r.y_left_last,
            r.y_right_first,
            r.y_last,
            one_based(&r.s1),
            one_based(&r.s2),
            one_based(&compat),
            lengths
        );
        out.push((r.clone(), compat));
    }
    let flm = FragmentLengthModel::new(200.0, 20.0)?;
    let h = generating_matrix(&reads, &gene, &flm)?;
    for (i, row) in h.matrix.rows().enumerate() {
        println!("h[{}] = {:?}", i + 1, row);
    }
    Ok(out)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
