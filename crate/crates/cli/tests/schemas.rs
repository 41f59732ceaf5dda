use std::path::Path;

use arbcheck::{run, EXIT_ARBITRAGE, EXIT_OK};
use serde_json::{Map, Value};

fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn resolve<'a>(root: &'a Value, node: &'a Value) -> &'a Value {
    match node["$ref"].as_str() {
        Some(r) => root.pointer(r.trim_start_matches('#')).unwrap(),
        None => node,
    }
}

/// Checks object keys, required keys, consts, string patterns and array
/// items; enough to keep the shipped schemas in step with emitted documents.
fn conforms(root: &Value, schema: &Value, doc: &Value, path: &str) -> Result<(), String> {
    let schema = resolve(root, schema);
    if let Some(c) = schema.get("const") {
        return (c == doc).then_some(()).ok_or(format!("{path}: expected {c}"));
    }
    if let Some(alts) = schema["oneOf"].as_array() {
        let ok = alts.iter().filter(|s| conforms(root, s, doc, path).is_ok()).count();
        return (ok == 1)
            .then_some(())
            .ok_or(format!("{path}: {ok} alternatives match"));
    }
    match schema["type"].as_str() {
        Some("object") => {
            let obj = doc.as_object().ok_or(format!("{path}: not an object"))?;
            let props = schema["properties"].as_object().cloned().unwrap_or_else(Map::new);
            for req in schema["required"].as_array().into_iter().flatten() {
                let key = req.as_str().unwrap();
                obj.get(key).ok_or(format!("{path}: missing {key}"))?;
            }
            for (k, v) in obj {
                let sub = props.get(k).ok_or(format!("{path}: unexpected {k}"))?;
                conforms(root, sub, v, &format!("{path}.{k}"))?;
            }
            Ok(())
        }
        Some("array") => {
            let items = doc.as_array().ok_or(format!("{path}: not an array"))?;
            items
                .iter()
                .enumerate()
                .try_for_each(|(i, v)| conforms(root, &schema["items"], v, &format!("{path}[{i}]")))
        }
        Some("string") => {
            let s = doc.as_str().ok_or(format!("{path}: not a string"))?;
            let plain = s.chars().all(|c| c.is_ascii_hexdigit() || "+-./ ".contains(c));
            plain.then_some(()).ok_or(format!("{path}: unexpected literal {s}"))
        }
        Some("integer") => doc
            .as_u64()
            .map(|_| ())
            .ok_or(format!("{path}: not a non-negative integer")),
        _ => Ok(()),
    }
}

fn arbcheck(args: &[&str]) -> (i32, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(
        std::iter::once("arbcheck").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn emitted_documents_follow_the_shipped_schemas() {
    let (model_schema, cert_schema) = (schema("model.schema.json"), schema("certificate.schema.json"));
    let dir = tempfile::tempdir().unwrap();
    let mut kinds = Vec::new();
    for seed in 0..8 {
        let seed = seed.to_string();
        let mode = if seed.parse::<u32>().unwrap() % 2 == 0 {
            "unconstrained"
        } else {
            "arbitrage-prone"
        };
        let (code, text) = arbcheck(&["generate", "--seed", &seed, "--horizon", "1..3", "--mode", mode]);
        assert_eq!(code, EXIT_OK);
        let model: Value = serde_json::from_str(&text).unwrap();
        conforms(&model_schema, &model_schema, &model, "model").unwrap();

        let model_path = dir.path().join(format!("m{seed}.json"));
        let cert_path = dir.path().join(format!("c{seed}.json"));
        std::fs::write(&model_path, text).unwrap();
        let (code, _) = arbcheck(&[
            "check",
            model_path.to_str().unwrap(),
            "--output",
            cert_path.to_str().unwrap(),
        ]);
        assert!(code == EXIT_OK || code == EXIT_ARBITRAGE);
        let cert: Value = serde_json::from_str(&std::fs::read_to_string(&cert_path).unwrap()).unwrap();
        conforms(&cert_schema, &cert_schema, &cert, "certificate").unwrap();
        kinds.push(cert["kind"].as_str().unwrap().to_owned());
    }
    assert!(kinds.iter().any(|k| k == "arbitrage") && kinds.iter().any(|k| k == "martingale_triple"));
}

#[test]
fn schema_rejects_unknown_fields() {
    let s = schema("model.schema.json");
    let doc = serde_json::json!({"format_version": 1, "nodes": [{"id": 0, "bid": "1", "ask": "1", "mid": "1"}]});
    assert!(conforms(&s, &s, &doc, "model").unwrap_err().contains("unexpected mid"));
}
