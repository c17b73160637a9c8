//! Uniform access to the learnable arrays of a layer tree.
//!
//! Every layer exposes its tensors through a visitor in a fixed order. The
//! same order is used by the optimizer state, the gradient buffers (which are
//! zeroed clones of the parameter struct) and the on-disk containers, so the
//! visitation order is part of the file format.

/// Visitor over named parameter arrays. Names are dotted paths.
pub trait Params {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64]));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64]));
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// A clone of `p` with every parameter set to zero. Used as a gradient buffer.
pub fn zeros_like<P: Params + Clone>(p: &P) -> P {
    let mut z = p.clone();
    z.visit_mut("", &mut |_, _, v| v.fill(0.0));
    z
}

pub fn num_params<P: Params>(p: &P) -> usize {
    let mut n = 0;
    p.visit("", &mut |_, _, v| n += v.len());
    n
}

/// Flattened copy of every parameter in visitation order.
pub fn flatten<P: Params>(p: &P) -> Vec<f64> {
    let mut out = Vec::new();
    p.visit("", &mut |_, _, v| out.extend_from_slice(v));
    out
}

/// Overwrites parameters from a flat vector produced by [`flatten`].
pub fn unflatten<P: Params>(p: &mut P, flat: &[f64]) {
    let mut off = 0;
    p.visit_mut("", &mut |_, _, v| {
        v.copy_from_slice(&flat[off..off + v.len()]);
        off += v.len();
    });
    assert_eq!(off, flat.len(), "flat parameter length mismatch");
}

/// `(name, shape, values)` for every tensor, in visitation order.
pub fn named_tensors<P: Params>(p: &P, prefix: &str) -> Vec<(String, Vec<usize>, Vec<f64>)> {
    let mut out = Vec::new();
    p.visit(prefix, &mut |name, shape, v| {
        out.push((name.to_string(), shape.to_vec(), v.to_vec()))
    });
    out
}

pub fn all_finite<P: Params>(p: &P) -> bool {
    let mut ok = true;
    p.visit("", &mut |_, _, v| ok &= v.iter().all(|x| x.is_finite()));
    ok
}

/// Adds `other` into `acc` elementwise. Both must come from the same architecture.
pub fn accumulate<P: Params>(acc: &mut P, other: &P) {
    let flat = flatten(other);
    let mut off = 0;
    acc.visit_mut("", &mut |_, _, v| {
        let n = v.len();
        for (a, b) in v.iter_mut().zip(&flat[off..off + n]) {
            *a += b;
        }
        off += n;
    });
}
