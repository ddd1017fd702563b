use super::{to_f64, Poly};

/// A polynomial lowered to nested Horner form with `f64` coefficients.
///
/// The tree peels one variable per level: `P = sum_k x_v^k P_k(x_{v+1}, ...)`,
/// evaluated from the highest power down. Building once and evaluating many
/// times is the hot path of the flow integrators.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    nvars: usize,
    root: Node,
}

#[derive(Clone, Debug)]
enum Node {
    Const(f64),
    Horner { var: usize, coeffs: Vec<Node> },
}

impl CompiledPoly {
    pub fn new(p: &Poly) -> Self {
        let terms: Vec<(Vec<u32>, f64)> = p
            .terms()
            .rev()
            .map(|(m, c)| (m.exps().to_vec(), to_f64(c)))
            .collect();
        CompiledPoly {
            nvars: p.nvars(),
            root: build(&terms, 0, p.nvars()),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Evaluates without validating `x`; callers guarantee the length.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }
}

fn build(terms: &[(Vec<u32>, f64)], var: usize, nvars: usize) -> Node {
    if terms.is_empty() {
        return Node::Const(0.0);
    }
    // skip variables that do not occur in this subtree
    let mut v = var;
    while v < nvars && terms.iter().all(|(e, _)| e[v] == 0) {
        v += 1;
    }
    if v == nvars {
        return Node::Const(terms.iter().map(|(_, c)| c).sum());
    }
    let max = terms.iter().map(|(e, _)| e[v]).max().unwrap_or(0) as usize;
    let mut buckets: Vec<Vec<(Vec<u32>, f64)>> = vec![Vec::new(); max + 1];
    for (e, c) in terms {
        buckets[e[v] as usize].push((e.clone(), *c));
    }
    let coeffs = buckets.iter().map(|b| build(b, v + 1, nvars)).collect();
    Node::Horner { var: v, coeffs }
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Horner { var, coeffs } => {
                let xv = x[*var];
                let mut acc = 0.0;
                for c in coeffs.iter().rev() {
                    acc = acc * xv + c.eval(x);
                }
                acc
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{int, rat};

    #[test]
    fn matches_direct_summation() {
        let p = Poly::from_terms(
            3,
            vec![
                (vec![2, 0, 1], rat(3, 2)),
                (vec![0, 3, 0], int(-2)),
                (vec![1, 1, 1], int(5)),
                (vec![0, 0, 0], rat(1, 4)),
            ],
        )
        .unwrap();
        let x: [f64; 3] = [0.7, -1.3, 2.1];
        let direct: f64 = p
            .terms()
            .map(|(m, c)| {
                to_f64(c)
                    * m.exps()
                        .iter()
                        .zip(&x)
                        .map(|(&e, &v)| v.powi(e as i32))
                        .product::<f64>()
            })
            .sum();
        assert!((p.compile().eval(&x) - direct).abs() < 1e-12);
    }
}
