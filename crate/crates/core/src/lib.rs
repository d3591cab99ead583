//! Joint isoform quantification across heterogeneous RNA-seq samples.
//!
//! A gene is modeled as a set of isoforms over non-overlapping subexons. Each
//! sample's reads come from sample-specific isoform proportions; a latent
//! informative group of samples shares the gene-level proportions `alpha`.
//! A collapsed Gibbs sampler estimates `alpha` together with each sample's
//! posterior probability of belonging to that group.
//!
//! ```
//! use msiq::gene_model::{derive_subexons, GeneAnnotation, IsoformExons};
//!
//! let ann = GeneAnnotation {
//!     gene_id: "g".into(),
//!     isoforms: vec![
//!         IsoformExons { isoform_id: "a".into(), exons: vec![[1, 100], [201, 300]] },
//!         IsoformExons { isoform_id: "b".into(), exons: vec![[1, 50], [201, 300]] },
//!     ],
//! };
//! let gene = derive_subexons(&ann).unwrap();
//! assert_eq!(gene.num_subexons(), 3);
//! ```

pub mod cli;
pub mod em;
pub mod error;
pub mod evaluation;
pub mod gene_model;
pub mod gibbs;
pub mod read_model;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use gene_model::{derive_subexons, GeneModel, GenomicInterval, Isoform};
pub use gibbs::{exact_posterior, run_chain, ChainConfig, Hyperparameters, PosteriorSummary};
pub use read_model::{generating_matrix, FragmentLengthModel, GeneratingMatrix, SummarizedRead};
