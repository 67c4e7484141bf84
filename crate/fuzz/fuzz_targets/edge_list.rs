#![no_main]

use libfuzzer_sys::fuzz_target;
use segcube::projection::ProjectedGraph;

// Edge list and isolated-node list, separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let (edges, isolated) = match data.iter().position(|&b| b == 0) {
        Some(i) => (&data[..i], &data[i + 1..]),
        None => (data, &b"groupID\n"[..]),
    };
    if let Ok(graph) = ProjectedGraph::from_csv(edges, isolated) {
        let again = ProjectedGraph::from_csv(graph.edges_csv().as_bytes(), graph.isolated_csv().as_bytes())
            .expect("written graph parses");
        assert_eq!(again.edges_csv(), graph.edges_csv());
    }
});
