//! Synthetic traffic: generate a pattern, round-trip it through the text
//! format and condense it to a traffic matrix.

use hybrid_noc::topology::MeshSpec;
use hybrid_noc::traffic::{generate_counted, trace_to_matrix, PatternSpec, Placement, Trace};

fn main() -> hybrid_noc::Result<()> {
    let mesh = MeshSpec::default();
    for spec in [PatternSpec::fcp(Placement::Center), PatternSpec::mfm(Placement::Corner)] {
        let generated = generate_counted(&spec, &mesh)?;
        let trace = generated.trace;
        let text = trace.render();
        assert_eq!(Trace::parse(&text)?, trace);
        let matrix = trace_to_matrix(&trace, &mesh)?;
        let heaviest = matrix
            .entries()
            .max_by(|a, b| a.2.total_cmp(&b.2))
            .expect("non-empty trace");
        println!(
            "{}: {} packets, {} flits, heaviest flow {} -> {} with {} flits",
            spec.label(),
            trace.packets.len(),
            trace.total_flits(),
            heaviest.0,
            heaviest.1,
            heaviest.2
        );
        println!("{}", text.lines().take(4).collect::<Vec<_>>().join("\n"));
    }
    Ok(())
}
