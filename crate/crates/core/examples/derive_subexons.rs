// Cut an exon-level annotation into subexons and print the derived form.
//
// ```bash
// cargo run --example derive_subexons
// ```

use msiq::gene_model::{derive_subexons, DerivedGene, GeneAnnotation, IsoformExons};

pub fn run_example() -> Result<DerivedGene, Box<dyn std::error::Error>> {
    let annotation = GeneAnnotation {
        gene_id: "toy".into(),
        isoforms: vec![
            IsoformExons {
                isoform_id: "long".into(),
                exons: vec![[1, 100], [201, 300]],
            },
            IsoformExons {
                isoform_id: "skip".into(),
                exons: vec![[1, 50], [201, 300]],
            },
            IsoformExons {
                isoform_id: "late".into(),
                exons: vec![[1, 100], [251, 300]],
            },
        ],
    };
    let gene = derive_subexons(&annotation)?;
    for (k, s) in gene.subexons().iter().enumerate() {
        println!("subexon {}: [{}, {}]", k + 1, s.start, s.end);
    }
    for j in 0..gene.num_isoforms() {
        let iso = gene.isoform(j)?;
        let idx: Vec<usize> = iso.subexon_indices.iter().map(|k| k + 1).collect();
        println!("{}: subexons {:?}, length {}", iso.isoform_id, idx, gene.isoform_length(j)?);
    }
    let derived = DerivedGene::from(&gene);
    println!("{}", serde_json::to_string_pretty(&derived)?);
    Ok(derived)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example().map(|_| ())
}
