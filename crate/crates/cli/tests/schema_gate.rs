use std::path::{Path, PathBuf};

use clap::Parser;
use proptest::prelude::*;
use prunechain_cli::store::Session;
use prunechain_cli::{run, Cli, Kind};
use tempfile::TempDir;

fn cli(chain: &Path, args: &[&str]) -> Cli {
    let chain = chain.to_str().unwrap();
    Cli::try_parse_from(["prunechain", "--chain", chain].iter().chain(args)).unwrap()
}

fn setup() -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let chain = dir.path().join("chain.jsonl");
    let schema = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/login.yaml");
    run(cli(&chain, &["init", "--schema", schema.to_str().unwrap()]), &mut Vec::new()).unwrap();
    run(cli(&chain, &["keygen", "ALPHA", "--seed", "0"]), &mut Vec::new()).unwrap();
    (dir, chain)
}

fn waiting(chain: &Path) -> usize {
    let path = chain.with_file_name("chain.jsonl.session.json");
    let session: Session = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    session.mempool.len()
}

/// The login rules spelled out by hand.
fn conforms(fields: &[(String, String)]) -> bool {
    let get = |k: &str| fields.iter().find(|(n, _)| n == k).map(|(_, v)| v.as_str());
    let tty = |v: &str| v.strip_prefix("tty").is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()));
    let lower = |v: &str| !v.is_empty() && v.bytes().all(|b| b.is_ascii_lowercase());
    fields.iter().all(|(k, _)| ["event", "terminal", "user"].contains(&k.as_str()))
        && matches!(get("event"), Some("login" | "logout"))
        && get("terminal").is_some_and(tty)
        && get("user").is_some_and(lower)
}

fn field() -> impl Strategy<Value = (String, String)> {
    let key = prop_oneof![Just("event"), Just("terminal"), Just("user"), Just("host")];
    let value = prop_oneof![
        Just("login".to_string()),
        Just("logout".to_string()),
        Just("reboot".to_string()),
        "tty[0-9]{0,2}",
        "pts/[0-9]",
        "[a-z]{0,5}",
        "[A-Za-z]{1,4}",
    ];
    (key.prop_map(String::from), value)
}

fn fields() -> impl Strategy<Value = Vec<(String, String)>> {
    proptest::collection::vec(field(), 0..5).prop_map(|mut v| {
        let mut seen = std::collections::BTreeSet::new();
        v.retain(|(k, _)| seen.insert(k.clone()));
        v
    })
}

fn login() -> impl Strategy<Value = Vec<(String, String)>> {
    (prop_oneof![Just("login"), Just("logout")], "tty[0-9]{1,3}", "[a-z]{1,8}").prop_map(|(e, t, u)| {
        vec![("user".to_string(), u), ("event".to_string(), e.to_string()), ("terminal".to_string(), t)]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn only_conforming_payloads_are_queued(fields in prop_oneof![login(), fields()]) {
        let (_dir, chain) = setup();
        let payload = serde_json::Value::Object(
            fields.iter().map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone()))).collect(),
        )
        .to_string();
        let result = run(cli(&chain, &["append", "--user", "ALPHA", "--payload", &payload]), &mut Vec::new());
        if conforms(&fields) {
            prop_assert!(result.is_ok(), "{:?}", result.err());
            prop_assert_eq!(waiting(&chain), 1);
        } else {
            let err = result.unwrap_err();
            prop_assert_eq!(err.kind, Kind::Validation);
            prop_assert_eq!(err.reason.as_str(), "schema-violation");
            prop_assert_eq!(waiting(&chain), 0);
        }
    }
}
