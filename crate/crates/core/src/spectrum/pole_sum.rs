//! Fast evaluation of Cauchy sums `S(λ) = Σ_k w_k / (x_k - λ)` over sorted poles.
//!
//! A binary tree over contiguous blocks of poles stores the moments
//! `M_p = Σ w ((x - c)/R)^p` of each node about its centre `c` (radius `R`).
//! For `|λ - c| >= SEPARATION · R` the node is summed through the geometric
//! expansion `-(1/d) Σ_p M_p (R/d)^p`, `d = λ - c`; otherwise its children are
//! visited, and leaves are summed directly. Truncation after `ORDER` terms
//! leaves a relative error below `SEPARATION^{-ORDER}`.

const LEAF: usize = 32;
const ORDER: usize = 34;
const SEPARATION: f64 = 3.0;

#[derive(Clone, Debug)]
struct Node {
    lo: usize,
    hi: usize,
    centre: f64,
    radius: f64,
    children: Option<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct PoleSum {
    poles: Vec<f64>,
    weights: Vec<f64>,
    nodes: Vec<Node>,
    moments: Vec<f64>,
    root: Option<usize>,
}

impl PoleSum {
    /// `poles` must be sorted ascending.
    pub fn new(poles: Vec<f64>, weights: Vec<f64>) -> Self {
        assert_eq!(poles.len(), weights.len());
        let mut tree = PoleSum {
            poles,
            weights,
            nodes: Vec::new(),
            moments: Vec::new(),
            root: None,
        };
        if !tree.poles.is_empty() {
            tree.root = Some(tree.build(0, tree.poles.len()));
        }
        tree
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let (a, b) = (self.poles[lo], self.poles[hi - 1]);
        let centre = 0.5 * (a + b);
        let radius = 0.5 * (b - a);
        let children = if hi - lo > LEAF {
            let mid = lo + (hi - lo) / 2;
            Some((self.build(lo, mid), self.build(mid, hi)))
        } else {
            None
        };
        let scale = if radius > 0.0 { 1.0 / radius } else { 0.0 };
        let start = self.moments.len();
        self.moments.resize(start + ORDER, 0.0);
        for k in lo..hi {
            let y = (self.poles[k] - centre) * scale;
            let mut p = self.weights[k];
            for m in &mut self.moments[start..start + ORDER] {
                *m += p;
                p *= y;
            }
        }
        self.nodes.push(Node {
            lo,
            hi,
            centre,
            radius,
            children,
        });
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    /// `(Σ w/(x-λ), Σ w/(x-λ)²)`.
    pub fn eval(&self, lambda: f64) -> (f64, f64) {
        let Some(root) = self.root else {
            return (0.0, 0.0);
        };
        let (mut s, mut ds) = (0.0, 0.0);
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            let d = lambda - node.centre;
            if d.abs() >= SEPARATION * node.radius && node.radius > 0.0 {
                let q = node.radius / d;
                let m = &self.moments[i * ORDER..(i + 1) * ORDER];
                // Horner on Σ M_p q^p and Σ (p+1) M_p q^p.
                let (mut v, mut dv) = (0.0, 0.0);
                for p in (0..ORDER).rev() {
                    v = v * q + m[p];
                    dv = dv * q + (p + 1) as f64 * m[p];
                }
                s -= v / d;
                ds += dv / (d * d);
            } else if let Some((l, r)) = node.children {
                stack.push(l);
                stack.push(r);
            } else {
                for k in node.lo..node.hi {
                    let inv = 1.0 / (self.poles[k] - lambda);
                    s += self.weights[k] * inv;
                    ds += self.weights[k] * inv * inv;
                }
            }
        }
        (s, ds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn direct(poles: &[f64], weights: &[f64], lambda: f64) -> (f64, f64) {
        poles.iter().zip(weights).fold((0.0, 0.0), |(s, ds), (&x, &w)| {
            let inv = 1.0 / (x - lambda);
            (s + w * inv, ds + w * inv * inv)
        })
    }

    #[test]
    fn matches_direct_sum_on_integer_poles() {
        let poles: Vec<f64> = (0..5000).map(|k| k as f64 + 0.5 * (k as f64).sin()).collect();
        let weights: Vec<f64> = (0..5000).map(|k| 1.0 + (k % 7) as f64).collect();
        let tree = PoleSum::new(poles.clone(), weights.clone());
        for lambda in [-100.0, 0.25, 17.3, 2500.5, 4999.9, 6000.0] {
            let (s, ds) = tree.eval(lambda);
            let (es, eds) = direct(&poles, &weights, lambda);
            let scale: f64 = poles
                .iter()
                .zip(&weights)
                .map(|(x, w)| w / (x - lambda).abs())
                .sum();
            assert!((s - es).abs() < 1e-13 * scale, "λ={lambda}: {s} vs {es}");
            assert!((ds - eds).abs() < 1e-12 * eds);
        }
    }

    #[test]
    fn empty_and_degenerate_nodes() {
        assert_eq!(PoleSum::new(vec![], vec![]).eval(1.0), (0.0, 0.0));
        let tree = PoleSum::new(vec![2.0; 100], vec![1.0; 100]);
        let (s, _) = tree.eval(0.0);
        assert!((s - 50.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn agrees_with_direct_summation(
            mut poles in proptest::collection::vec(0.0f64..1e4, 1..800),
            lambda in -50.0f64..1.1e4,
        ) {
            poles.sort_by(f64::total_cmp);
            let weights: Vec<f64> = poles.iter().map(|x| 1.0 + (x * 13.0).floor() % 5.0).collect();
            prop_assume!(poles.iter().all(|x| (x - lambda).abs() > 1e-6));
            let tree = PoleSum::new(poles.clone(), weights.clone());
            let (s, ds) = tree.eval(lambda);
            let (es, eds) = direct(&poles, &weights, lambda);
            let scale: f64 = poles.iter().zip(&weights).map(|(x, w)| w / (x - lambda).abs()).sum();
            prop_assert!((s - es).abs() <= 1e-12 * scale);
            prop_assert!((ds - eds).abs() <= 1e-11 * eds);
        }
    }
}
