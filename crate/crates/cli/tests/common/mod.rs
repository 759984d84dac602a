#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn xq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xq"))
        .args(args)
        .output()
        .expect("xq binary runs")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
}

// echoes the first field of every row; leaves `<script>.quit` on teardown
pub const ECHO_MODEL: &str = r#"read header
echo OK
while read cmd n; do
  if [ "$cmd" = QUIT ]; then echo "$header" > "$0.quit"; exit 0; fi
  i=0
  while [ "$i" -lt "$n" ]; do
    IFS=, read first rest
    echo "$first"
    i=$((i + 1))
  done
done
"#;

// answers the first batch with a number, then garbage on response line 3
pub const GARBAGE_MODEL: &str = r#"read header
echo OK
read cmd n
echo 0.25
echo banana
sleep 5
"#;

// a different answer every time
pub const STOCHASTIC_MODEL: &str = r#"read header
echo OK
c=0
while read cmd n; do
  [ "$cmd" = QUIT ] && exit 0
  i=0
  while [ "$i" -lt "$n" ]; do
    read row
    c=$((c + 1))
    echo "$c"
    i=$((i + 1))
  done
done
"#;

impl Fixture {
    pub fn new() -> Self {
        let f = Self {
            dir: tempfile::tempdir().unwrap(),
        };
        let mut csv = String::from("a,b,c,colour,y\n");
        for i in 0..48 {
            let t = i as f64;
            let (a, b, c) = ((0.7 * t).sin(), (0.3 * t).cos() * 2.0, (1.3 * t).sin());
            let colour = ["red", "green", "blue"][i % 3];
            let bump = if colour == "red" { 1.0 } else { 0.0 };
            csv.push_str(&format!("{a},{b},{c},{colour},{}\n", 2.0 * a - b + a * c + bump));
        }
        f.write("data.csv", &csv);
        let mut numeric = String::from("a,b,c\n");
        for i in 0..30 {
            let t = i as f64;
            numeric.push_str(&format!("{},{},{}\n", (0.7 * t).sin(), (0.3 * t).cos(), (1.1 * t).sin()));
        }
        f.write("numeric.csv", &numeric);
        f.write(
            "chunks.json",
            r#"{"input_chunks": {"a": ["a"], "bc": ["b", "c"], "colour": ["colour"]},
                "output_chunks": ["a", "bc", "colour"], "provenance": "domain_grouped"}"#,
        );
        f.write(
            "numeric_chunks.json",
            r#"{"input_chunks": {"a": ["a"], "b": ["b"], "c": ["c"]},
                "output_chunks": ["a", "b", "c"]}"#,
        );
        f.write("echo.sh", ECHO_MODEL);
        f.write("garbage.sh", GARBAGE_MODEL);
        f.write("stochastic.sh", STOCHASTIC_MODEL);
        f
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn p(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    pub fn write(&self, name: &str, content: &str) {
        std::fs::write(self.path(name), content).unwrap();
    }

    pub fn external(&self, script: &str) -> String {
        format!("external:sh {}", self.p(script))
    }
}

pub fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn schema_errors(report: &Value) -> Vec<String> {
    let schema: Value = serde_json::from_str(xq::REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    validator.iter_errors(report).map(|e| format!("{} at {}", e, e.instance_path)).collect()
}

/// Structural equality with numbers compared to `tol`; returns the first
/// differing path.
pub fn json_close(a: &Value, b: &Value, tol: f64, path: &str) -> Result<(), String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() <= tol {
                Ok(())
            } else {
                Err(format!("{path}: {x} vs {y}"))
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Err(format!("{path}: length {} vs {}", x.len(), y.len()));
            }
            x.iter()
                .zip(y)
                .enumerate()
                .try_for_each(|(i, (p, q))| json_close(p, q, tol, &format!("{path}[{i}]")))
        }
        (Value::Object(x), Value::Object(y)) => {
            if x.len() != y.len() || x.keys().any(|k| !y.contains_key(k)) {
                return Err(format!("{path}: keys differ"));
            }
            x.iter()
                .try_for_each(|(k, v)| json_close(v, &y[k], tol, &format!("{path}.{k}")))
        }
        _ if a == b => Ok(()),
        _ => Err(format!("{path}: {a} vs {b}")),
    }
}
