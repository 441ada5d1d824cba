use std::ffi::CString;

use pyo3::prelude::*;
use subexp_py::{c_alpha, python_module, predict_power, CompoundPoisson, Law};

#[test]
fn rust_side_api() {
    let p3 = Law::new("pareto:alpha=3").unwrap();
    assert!((p3.tail(1.0) - 0.125).abs() < 1e-15);
    assert!((p3.mean().unwrap() - 0.5).abs() < 1e-15);
    assert!(Law::new("pareto:alpha=0.5").unwrap().mean().is_none());
    let p = predict_power(&p3, 1.0).unwrap();
    assert_eq!(p.correction(10.0), 0.0);
    assert!((c_alpha(0.25).unwrap() + 1.2708196271909686).abs() < 1e-13);
    let cp = CompoundPoisson::new("point:at=2", 0.5, 1.0, 60.0, 1.0).unwrap();
    // P(N >= 2) for N ~ Poisson(1/2) when x in [2, 4)
    let want = 1.0 - 1.5 * (-0.5f64).exp();
    assert!((cp.tail(3.0).unwrap() - want).abs() < 1e-12);
}

#[test]
fn module_from_python() {
    pyo3::append_to_inittab!(python_module);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(
            r#"
import subexp_py as s
law = s.Law("pareto:alpha=3")
assert abs(law.tail(1.0) - 0.125) < 1e-15
r = s.diagnose(law, "s2loc", s.log_grid(10.0, 1000.0, 24))[0]
assert r.verdict == "converged", r
regime, nu, power = s.predict_rv(0.25)
assert regime == "fractional-index"
out = s.invert("point:at=2", 0.5)
assert max(abs(a - b) for a, b in zip(out["recovered"], out["jump_grid"])) < 1e-12
try:
    s.invert("point:at=2", 0.7)
    raise SystemExit("expected a ValueError")
except ValueError:
    pass
try:
    s.diagnose(s.Law("pareto:alpha=0.5"), "s2loc", [10.0, 20.0, 40.0, 80.0])
    raise SystemExit("expected a ValueError")
except ValueError:
    pass
"#,
        )
        .unwrap();
        py.run(&code, None, None).unwrap();
    });
}
