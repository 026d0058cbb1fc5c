//! Derivative-free one-dimensional search primitives used by the product-state
//! refinement and the observer search. All routines minimize.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // 1/φ
const INV_PHI2: f64 = 0.381_966_011_250_105_1; // 1/φ²

/// Result of a line search: best abscissa, value, and evaluations spent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMin {
    pub x: f64,
    pub f: f64,
    pub evals: usize,
}

/// Golden-section search on `[lo, hi]`, stopping once the bracket is below
/// `tol` or `max_evals` evaluations were spent. The best point ever seen is
/// returned, so the result never exceeds the smaller endpoint probes.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64, max_evals: usize) -> LineMin {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut best = LineMin { x: a, f: f64::INFINITY, evals: 0 };
    if max_evals == 0 {
        return best;
    }
    let mut c = a + INV_PHI2 * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    best = LineMin { x: c, f: fc, evals: 1 };
    if max_evals == 1 {
        return best;
    }
    let mut fd = f(d);
    best.evals = 2;
    if fd < best.f {
        best.x = d;
        best.f = fd;
    }
    while best.evals < max_evals && (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + INV_PHI2 * (b - a);
            fc = f(c);
            if fc < best.f {
                best.x = c;
                best.f = fc;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best.f {
                best.x = d;
                best.f = fd;
            }
        }
        best.evals += 1;
    }
    best
}

/// Unbounded line search from `x0` (with known value `f0`): expands a
/// bracket in steps starting at `step`, then refines by golden section.
pub fn line_search(mut f: impl FnMut(f64) -> f64, x0: f64, f0: f64, step: f64, tol: f64, max_evals: usize) -> LineMin {
    let mut evals = 0;
    let mut best = LineMin { x: x0, f: f0, evals: 0 };
    let probe = |x: f64, evals: &mut usize, best: &mut LineMin, f: &mut dyn FnMut(f64) -> f64| {
        let v = f(x);
        *evals += 1;
        if v < best.f {
            best.x = x;
            best.f = v;
        }
        v
    };
    let fp = probe(x0 + step, &mut evals, &mut best, &mut f);
    let fm = probe(x0 - step, &mut evals, &mut best, &mut f);
    if fp >= f0 && fm >= f0 {
        // minimum is bracketed by [x0 - step, x0 + step]
        let g = golden_section(&mut f, x0 - step, x0 + step, tol, max_evals.saturating_sub(evals));
        evals += g.evals;
        if g.f < best.f {
            best.x = g.x;
            best.f = g.f;
        }
        best.evals = evals;
        return best;
    }
    let dir = if fp < fm { 1.0 } else { -1.0 };
    let (mut prev, mut cur, mut fcur) = (x0, x0 + dir * step, fp.min(fm));
    let mut h = step;
    loop {
        if evals >= max_evals {
            break;
        }
        h *= 2.0;
        let next = cur + dir * h;
        let fnext = probe(next, &mut evals, &mut best, &mut f);
        if fnext >= fcur || !fnext.is_finite() {
            let g = golden_section(&mut f, prev, next, tol, max_evals.saturating_sub(evals));
            evals += g.evals;
            if g.f < best.f {
                best.x = g.x;
                best.f = g.f;
            }
            break;
        }
        prev = cur;
        cur = next;
        fcur = fnext;
    }
    best.evals = evals;
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_minimum() {
        let r = golden_section(|x| (x - 0.3).powi(2), -1.0, 2.0, 1e-10, 200);
        assert!((r.x - 0.3).abs() < 1e-8);
        assert!(r.evals <= 200);
    }

    #[test]
    fn golden_respects_budget() {
        let mut calls = 0;
        let r = golden_section(
            |x| {
                calls += 1;
                x * x
            },
            -1.0,
            1.0,
            0.0,
            7,
        );
        assert_eq!(calls, 7);
        assert_eq!(r.evals, 7);
    }

    #[test]
    fn line_search_expands_then_refines() {
        let f = |x: f64| (x - 5.0).powi(2) + 1.0;
        let r = line_search(f, 0.0, f(0.0), 0.1, 1e-10, 200);
        assert!((r.x - 5.0).abs() < 1e-6, "{r:?}");
        let r = line_search(|x: f64| (x + 3.0).abs(), 0.0, 3.0, 0.5, 1e-10, 200);
        assert!((r.x + 3.0).abs() < 1e-6, "{r:?}");
    }

    #[test]
    fn line_search_never_worsens() {
        let f = |x: f64| x.sin();
        let r = line_search(f, 1.0, f(1.0), 0.2, 1e-9, 3);
        assert!(r.f <= f(1.0));
    }
}
