//! Built-in reference experiments for `gtwalk verify <name>`.

/// `(name, description, TOML document)`.
pub const PRESETS: &[(&str, &str, &str)] = &[
    (
        "coupling-flat",
        "reflection coupling in the plane: survival equals χ(0.5)",
        r#"
[[experiment]]
id = "coupling-flat"
kind = "verify-coupling-bound"
manifold = "euclidean(2)"
t1 = 0.0
t2 = 1.0
alpha = 0.02
delta_couple = 0.04
d0 = 1.0
n_paths = 20000
seed = 1
"#,
    ),
    (
        "coupling-sphere",
        "reflection coupling on the unit sphere: survival below χ(1/√2)",
        r#"
[[experiment]]
id = "coupling-sphere"
kind = "verify-coupling-bound"
manifold = "sphere(2)"
t1 = 0.0
t2 = 0.5
alpha = 0.02
delta_couple = 0.04
d0 = 1.0
n_paths = 10000
seed = 2
"#,
    ),
    (
        "coupling-flow-sphere",
        "reflection coupling on the sphere under backward Ricci flow",
        r#"
[[experiment]]
id = "coupling-flow-sphere"
kind = "verify-coupling-bound"
manifold = "flow-sphere(2)"
t1 = 0.0
t2 = 0.5
alpha = 0.02
delta_couple = 0.04
d0 = 1.0
n_paths = 10000
seed = 3
"#,
    ),
    (
        "contraction",
        "parallel-transport coupling: exact on a scaled plane, within 5α on the flow sphere",
        r#"
[[experiment]]
id = "contraction-scaled"
kind = "verify-contraction"
manifold = "scaled(euclidean(2), 1.0)"
k = 1.0
t1 = 0.0
t2 = 1.0
alpha = 0.05
d0 = 1.0
contraction_c = 2e-9
n_paths = 200
seed = 4

[[experiment]]
id = "contraction-flow-sphere-0.05"
kind = "verify-contraction"
manifold = "flow-sphere(2)"
t1 = 0.0
t2 = 0.5
alpha = 0.05
d0 = 1.0
contraction_c = 5.0
n_paths = 200
seed = 5

[[experiment]]
id = "contraction-flow-sphere-0.02"
kind = "verify-contraction"
manifold = "flow-sphere(2)"
t1 = 0.0
t2 = 0.5
alpha = 0.02
d0 = 1.0
contraction_c = 5.0
n_paths = 200
seed = 6
"#,
    ),
    (
        "gradient",
        "half-space indicator in the plane: |P f(x) − P f(y)| below d/√(2π)",
        r#"
[[experiment]]
id = "gradient"
kind = "verify-gradient"
manifold = "euclidean(2)"
t1 = 0.0
t2 = 1.0
alpha = 0.02
delta_couple = 0.02
start = [0.5, 0.0]
start2 = [0.7, 0.0]
test_function = { kind = "half-space", axis = 0, offset = 0.0 }
n_paths = 20000
seed = 7
"#,
    ),
    (
        "convergence",
        "terminal law on the line (KS against N(0, 1)) and on the circle (W1 trend)",
        r#"
[[experiment]]
id = "convergence-line"
kind = "convergence"
manifold = "euclidean(1)"
t1 = 0.0
t2 = 1.0
alphas = [0.02]
n_paths = 10000
seed = 8

[[experiment]]
id = "convergence-circle"
kind = "convergence"
manifold = "circle"
t1 = 0.0
t2 = 1.0
alphas = [0.2, 0.1, 0.05]
n_paths = 10000
seed = 9
"#,
    ),
    (
        "ou",
        "Ornstein–Uhlenbeck survival against χ(a/(2√β))",
        r#"
[[experiment]]
id = "ou-k0"
kind = "ou-survival"
a = 1.0
k = 0.0
t1 = 0.0
t2 = 1.0
h = 1e-4
n_paths = 10000
seed = 10

[[experiment]]
id = "ou-k1"
kind = "ou-survival"
a = 1.0
k = 1.0
t1 = 0.0
t2 = 1.0
h = 1e-4
n_paths = 10000
seed = 11
"#,
    ),
    (
        "feller",
        "Feller test: b ≡ 0 survives, b(s) = s explodes",
        r#"
[[experiment]]
id = "feller-zero"
kind = "feller-test"
b = "zero"
expect = "survives"

[[experiment]]
id = "feller-linear"
kind = "feller-test"
b = "linear"
expect = "explodes"
"#,
    ),
    (
        "domination",
        "radial and chain domination violated on fewer than 5% of paths",
        r#"
[[experiment]]
id = "domination-radial"
kind = "radial-domination"
process = "radial"
manifold = "euclidean(2)"
t1 = 0.0
t2 = 1.0
alpha = 0.02
b = "zero"
c0 = 1.0
r0 = 0.1
margin = 0.1
n_paths = 2000
seed = 12

[[experiment]]
id = "domination-chain"
kind = "radial-domination"
process = "chain"
manifold = "flow-sphere(2)"
t1 = 0.0
t2 = 0.5
alpha = 0.02
d0 = 1.0
margin = 0.05
n_paths = 2000
seed = 13
"#,
    ),
];

pub fn find(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{parse_config, Overrides};

    #[test]
    fn presets_parse() {
        for (name, _, text) in PRESETS {
            let s = parse_config(text, &Overrides::default()).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!s.experiments.is_empty());
        }
    }
}
