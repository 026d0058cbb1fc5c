//! Display units. Everything is computed in nats; `--units bits` rewrites
//! divergence fields of the JSON output and nothing else.

use clap::ValueEnum;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Units {
    Nats,
    Bits,
}

/// Keys whose values are divergences but whose names carry no unit.
const UNITLESS_DIVERGENCE_KEYS: [&str; 5] = ["phi", "phi_internal", "phi_at_construction", "score", "phi_before"];

impl Units {
    pub fn name(self) -> &'static str {
        match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        }
    }

    pub fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => std::f64::consts::LOG2_E,
        }
    }

    /// Rewrites `*_nats` / `nats` keys to bits and scales the unitless
    /// divergence keys. A no-op for nats.
    pub fn convert(self, value: Value) -> Value {
        if self == Units::Nats {
            return value;
        }
        let s = self.scale();
        match value {
            Value::Object(map) => {
                let mut out = Map::new();
                for (k, v) in map {
                    if k == "nats" || k.ends_with("_nats") {
                        let key = format!("{}bits", &k[..k.len() - 4]);
                        out.insert(key, scale_number(v, s));
                    } else if UNITLESS_DIVERGENCE_KEYS.contains(&k.as_str()) {
                        out.insert(k, scale_number(v, s));
                    } else if k.ends_with("_bits") {
                        // recomputed from the matching nats key
                        if !out.contains_key(&k) {
                            out.insert(k, v);
                        }
                    } else {
                        out.insert(k, self.convert(v));
                    }
                }
                Value::Object(out)
            }
            Value::Array(items) => Value::Array(items.into_iter().map(|v| self.convert(v)).collect()),
            other => other,
        }
    }
}

fn scale_number(v: Value, s: f64) -> Value {
    match v.as_f64() {
        Some(x) => serde_json::json!(x * s),
        None => v,
    }
}
