//! Drives the module through an embedded interpreter.

use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::ffi::CString;

fn run(script: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(maxlab_py::maxlab_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("ml", module).unwrap();
        let code = CString::new(script).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("script failed");
        }
    });
}

#[test]
fn groups_and_grids() {
    run(r#"
h = ml.Group.heisenberg()
assert h.q == 4.0 and h.c1 is None
g = [0.3, -0.2, 0.5]
assert max(abs(a) for a in h.mul(g, h.inv(g))) < 1e-15
assert abs(h.norm(h.dilate(g, 2.0)) - 2.0 * h.norm(g)) < 1e-12
e = ml.Group.euclidean(1)
grid = ml.Grid(e, [-1.0], [1.0], [9])
assert len(grid) == 9 and grid.node(4) == [0.0]
try:
    ml.Grid(e, [1.0], [-1.0], [9])
    raise AssertionError("inverted box accepted")
except ml.MaxlabError:
    pass
"#);
}

#[test]
fn norms_and_young_functions() {
    run(r#"
grid = ml.Grid(ml.Group.euclidean(1), [-1.0], [1.0], [1025])
f = ml.Field.from_tag(grid, "indicator(0.5)")
r = ml.luxemburg(f, ml.Young("power(2)"))
assert r["converged"] and abs(r["value"] - (511 / 512) ** 0.5) < 1e-9
assert ml.weak(f, ml.Young("power(2)"))["value"] <= r["value"] * (1 + 1e-9)
phi = ml.Young("power(3)")
assert abs(phi(2.0) - 8.0) < 1e-12
psi = phi.conjugate()
assert psi.label == "conj(power(3))"
for s, t in [(0.5, 2.0), (1.3, 0.7), (3.0, 9.0)]:
    assert s * t <= phi(s) + psi(t) + 1e-12
"#);
}

#[test]
fn operators_agree_with_the_oracle() {
    run(r#"
grid = ml.Grid(ml.Group.euclidean(2), [-1.0, -1.0], [1.0, 1.0], [17, 17])
fam = ml.Family(grid, centers_stride=4, r_max=0.5)
f = ml.Field.from_tag(grid, "noise(1)")
b = ml.Field.from_tag(grid, "gauge-power(0.5)")
for op in ["maxal", "sharp", "maxcomm", "comm-max", "comm-sharp"]:
    fast = ml.apply(op, f, fam, 0.5, b)
    slow = ml.apply_oracle(op, f, fam, 0.5, b)
    assert fast.values == slow.values, op
c = ml.Field(grid, [1.0] * len(grid))
assert max(ml.apply("sharp", c, fam).values) == 0.0
"#);
}

#[test]
fn characterize_returns_a_dict() {
    run(r#"
grid = ml.Grid(ml.Group.euclidean(1), [-1.0], [1.0], [129])
b = ml.Field.from_tag(grid, "constant(1)")
rep = ml.characterize(b, 0.5, ml.Young("power(1.5)"), centers_stride=8, r_max=0.5)
assert isinstance(rep, dict)
for key in ["sup_f1", "sup_f2", "sup_f3", "sup_f4"]:
    assert rep[key] <= 1e-6, key
"#);
}
