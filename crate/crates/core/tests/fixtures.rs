use std::path::Path;

use mfgnet::edgecost::ModelSpec;
use mfgnet::netmodel::examples::{braess, one_edge, two_in_two_out};
use mfgnet::netmodel::Network;

fn load(name: &str) -> Network {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../networks").join(name);
    Network::from_toml_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_networks_match_builtin_examples() {
    assert_eq!(load("braess.toml"), braess(false, 0.0));
    assert_eq!(load("braess_bridge.toml"), braess(true, 0.0));
    assert_eq!(load("one_edge.toml"), one_edge(ModelSpec::quadratic(), 1.0));
    assert_eq!(load("two_in_two_out.toml"), two_in_two_out(ModelSpec::quadratic()));
}
