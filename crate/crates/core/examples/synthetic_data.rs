//! Generates each synthetic problem and writes the PPCA dataset as CSV
//! with the missing-cell token the loaders understand.

use stiefel_mcmc::bench::{format_csv_matrix, parse_csv_matrix, synth_data, Dataset, SynthSpec, DEFAULT_MISSING_TOKEN};

fn main() {
    let specs = [
        ("uniform", SynthSpec::Uniform { j: 10, k: 3 }),
        ("ppca synthetic 1", SynthSpec::ppca_synthetic1()),
        ("ppca synthetic 2", SynthSpec::ppca_synthetic2()),
        ("eigenmodel", SynthSpec::eigenmodel_default(30, 3)),
        ("mc", SynthSpec::mc_default(14, 46, 3)),
    ];
    for (name, spec) in &specs {
        let s = synth_data(spec, 0);
        let shape = match &s.dataset {
            Dataset::Uniform { j, k } => format!("frame {j}x{k}, no data"),
            Dataset::Ppca(d) => format!("Y {}x{}", d.y.rows(), d.y.cols()),
            Dataset::Eigenmodel(d) => format!("adjacency {}x{}", d.y.rows(), d.y.cols()),
            Dataset::Mc(d) => format!("panel {}x{}, {} masked, {} covariate(s)", d.y.rows(), d.y.cols(), d.missing_count(), d.covariates.len()),
        };
        println!("{name:<18} {shape}; generating λ {:?}", s.truth.lambda);
    }

    let Dataset::Mc(panel) = synth_data(&SynthSpec::mc_default(4, 6, 1), 1).dataset else { unreachable!() };
    let text = format_csv_matrix(&panel.y, Some(&panel.missing), DEFAULT_MISSING_TOKEN, None);
    println!("\na 4x6 panel as CSV:\n{text}");
    let back = parse_csv_matrix(&text, DEFAULT_MISSING_TOKEN).unwrap();
    println!("reads back with {} missing cells", back.missing_count());
}
