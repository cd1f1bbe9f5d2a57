use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use super::{MAX_ORDER, MAX_VARS};

/// Exponent vector of a monomial; ordered graded-lexicographically.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    exps: Vec<u8>,
}

impl MultiIndex {
    pub fn new(exps: Vec<u8>) -> Self {
        Self { exps }
    }

    pub fn zero(n: usize) -> Self {
        Self { exps: vec![0; n] }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut exps = vec![0; n];
        exps[i] = 1;
        Self { exps }
    }

    pub fn exponents(&self) -> &[u8] {
        &self.exps
    }

    pub fn n(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| u32::from(e)).sum()
    }

    /// `α! = Π α_i!`
    pub fn factorial(&self) -> f64 {
        self.exps
            .iter()
            .map(|&e| (1..=u32::from(e)).product::<u32>() as f64)
            .product()
    }

    pub(crate) fn first_nonzero(&self) -> Option<usize> {
        self.exps.iter().position(|&e| e > 0)
    }

    pub(crate) fn lowered(&self, var: usize) -> Self {
        let mut exps = self.exps.clone();
        exps[var] -= 1;
        Self { exps }
    }

    fn raised(&self, var: usize) -> Self {
        let mut exps = self.exps.clone();
        exps[var] += 1;
        Self { exps }
    }

    /// All multi-indices in `n` variables of degree at most `max_degree`, sorted.
    pub fn all(n: usize, max_degree: u32) -> Vec<Self> {
        let mut out = Vec::new();
        let mut current = vec![0u8; n];
        fn rec(pos: usize, left: u32, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
            if pos == cur.len() {
                out.push(MultiIndex::new(cur.clone()));
                return;
            }
            for e in 0..=left {
                cur[pos] = e as u8;
                rec(pos + 1, left - e, cur, out);
            }
            cur[pos] = 0;
        }
        rec(0, max_degree, &mut current, &mut out);
        out.sort();
        out
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.exps.cmp(&self.exps))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.exps.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Monomial tables for one variable count.
pub(crate) struct Basis {
    monomials: Vec<MultiIndex>,
    degrees: Vec<u8>,
    lookup: HashMap<Vec<u8>, usize>,
    degree_end: [usize; MAX_ORDER as usize + 1],
    // (i, j, k) with mono[i] + mono[j] = mono[k], sorted by degree of k
    products: Vec<(u16, u16, u16)>,
    product_end: [usize; MAX_ORDER as usize + 1],
    // per variable: (src, dst, factor) with ∂_var mono[src] = factor * mono[dst]
    partials: Vec<Vec<(usize, usize, f64)>>,
    units: Vec<usize>,
}

impl Basis {
    fn build(n: usize) -> Self {
        let monomials = MultiIndex::all(n, u32::from(MAX_ORDER));
        let degrees: Vec<u8> = monomials.iter().map(|m| m.degree() as u8).collect();
        let lookup: HashMap<Vec<u8>, usize> = monomials
            .iter()
            .enumerate()
            .map(|(k, m)| (m.exps.clone(), k))
            .collect();
        let mut degree_end = [0; MAX_ORDER as usize + 1];
        for (d, end) in degree_end.iter_mut().enumerate() {
            *end = degrees.iter().filter(|&&x| usize::from(x) <= d).count();
        }

        let mut products = Vec::new();
        for (i, a) in monomials.iter().enumerate() {
            for (j, b) in monomials.iter().enumerate() {
                if degrees[i] + degrees[j] > MAX_ORDER {
                    continue;
                }
                let sum: Vec<u8> = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                let k = lookup[&sum];
                products.push((i as u16, j as u16, k as u16));
            }
        }
        products.sort_by_key(|&(_, _, k)| degrees[k as usize]);
        let mut product_end = [0; MAX_ORDER as usize + 1];
        for (d, end) in product_end.iter_mut().enumerate() {
            *end = products
                .iter()
                .filter(|&&(_, _, k)| usize::from(degrees[k as usize]) <= d)
                .count();
        }

        let partials = (0..n)
            .map(|var| {
                monomials
                    .iter()
                    .enumerate()
                    .filter(|(_, m)| m.degree() < u32::from(MAX_ORDER))
                    .map(|(dst, m)| {
                        let up = m.raised(var);
                        let src = lookup[&up.exps];
                        (src, dst, f64::from(up.exps[var]))
                    })
                    .collect()
            })
            .collect();
        let units = (0..n)
            .map(|i| lookup[&MultiIndex::unit(n, i).exps])
            .collect();

        Self {
            monomials,
            degrees,
            lookup,
            degree_end,
            products,
            product_end,
            partials,
            units,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.monomials.len()
    }

    pub(crate) fn monomials(&self) -> &[MultiIndex] {
        &self.monomials
    }

    pub(crate) fn index_of(&self, alpha: &MultiIndex) -> usize {
        self.lookup[&alpha.exps]
    }

    pub(crate) fn unit_index(&self, i: usize) -> usize {
        self.units[i]
    }

    pub(crate) fn degree(&self, k: usize) -> u8 {
        self.degrees[k]
    }

    /// Number of monomials of degree `<= order`.
    pub(crate) fn degree_end(&self, order: u8) -> usize {
        self.degree_end[usize::from(order)]
    }

    pub(crate) fn products(&self, order: u8) -> &[(u16, u16, u16)] {
        &self.products[..self.product_end[usize::from(order)]]
    }

    pub(crate) fn partial_table(&self, var: usize) -> &[(usize, usize, f64)] {
        &self.partials[var]
    }
}

static BASES: [OnceLock<Basis>; MAX_VARS + 1] = [const { OnceLock::new() }; MAX_VARS + 1];

pub(crate) fn basis(n: usize) -> &'static Basis {
    BASES[n].get_or_init(|| Basis::build(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_sizes() {
        // C(n + 3, 3)
        assert_eq!(basis(1).len(), 4);
        assert_eq!(basis(2).len(), 10);
        assert_eq!(basis(4).len(), 35);
        assert_eq!(basis(6).len(), 84);
    }

    #[test]
    fn graded_lex_order() {
        let names: Vec<String> = basis(2).monomials().iter().map(|m| m.to_string()).collect();
        assert_eq!(
            names,
            vec![
                "(0,0)", "(1,0)", "(0,1)", "(2,0)", "(1,1)", "(0,2)", "(3,0)", "(2,1)", "(1,2)",
                "(0,3)"
            ]
        );
    }

    #[test]
    fn factorials() {
        assert_eq!(MultiIndex::new(vec![3]).factorial(), 6.0);
        assert_eq!(MultiIndex::new(vec![2, 1]).factorial(), 2.0);
        assert_eq!(MultiIndex::new(vec![1, 1, 1]).factorial(), 1.0);
    }
}
