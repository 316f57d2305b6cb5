//! Independent reference computations shared by the integration tests.
//!
//! Everything here is derived from the exponent matrix alone with its own
//! parser, inverse and basis enumeration, so that it can be compared against
//! the library without sharing code paths.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Q = BigRational;

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

pub fn b2(x: &Q) -> Q {
    x * x - x + qr(1, 6)
}

fn invert(m: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("invertible");
        a.swap(col, piv);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = &*x / &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let v = &a[col][c] * &f;
                    a[r][c] -= v;
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Fermat,
    Chain,
    Loop,
}

/// One atomic summand; `vars[l]` plays `x_{l+1}` of the normal form.
#[derive(Debug, Clone)]
pub struct Block {
    pub kind: Kind,
    pub vars: Vec<usize>,
    pub a: Vec<i64>,
}

/// A standard vector of the dual ring with its chain stratum per block.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Vector {
    pub m: Vec<u32>,
    pub strata: Vec<usize>,
}

/// Reference data of an invertible polynomial.
#[derive(Debug, Clone)]
pub struct Poly {
    pub e: Vec<Vec<i64>>,
    pub inv: Vec<Vec<Q>>,
    pub q: Vec<Q>,
    pub qt: Vec<Q>,
    pub blocks: Vec<Block>,
}

impl Poly {
    /// Parses `x1^2*x2 + x2^3`; row `i` of the matrix is the monomial led by `x_{i+1}`.
    pub fn parse(text: &str) -> Poly {
        let terms: Vec<Vec<(usize, i64)>> = text
            .split('+')
            .map(|t| {
                t.split('*')
                    .map(|f| {
                        let f = f.trim().trim_start_matches('x');
                        let (v, p) = f.split_once('^').unwrap_or((f, "1"));
                        (v.parse::<usize>().unwrap() - 1, p.parse::<i64>().unwrap())
                    })
                    .collect()
            })
            .collect();
        let n = terms.len();
        let mut e = vec![vec![0i64; n]; n];
        for t in &terms {
            let lead = t.iter().find(|(_, p)| *p >= 2).expect("leading exponent").0;
            for &(v, p) in t {
                e[lead][v] += p;
            }
        }
        let rational: Vec<Vec<Q>> = e.iter().map(|r| r.iter().map(|&x| qi(x)).collect()).collect();
        let inv = invert(&rational);
        let q = inv.iter().map(|r| r.iter().fold(Q::zero(), |s, x| s + x)).collect();
        let transposed: Vec<Vec<Q>> = (0..n).map(|i| (0..n).map(|j| rational[j][i].clone()).collect()).collect();
        let qt = invert(&transposed).iter().map(|r| r.iter().fold(Q::zero(), |s, x| s + x)).collect();
        let blocks = find_blocks(&e);
        Poly { e, inv, q, qt, blocks }
    }

    pub fn n(&self) -> usize {
        self.e.len()
    }

    pub fn a(&self, i: usize) -> i64 {
        self.e[i][i]
    }

    pub fn successor(&self, i: usize) -> Option<usize> {
        (0..self.n()).find(|&j| j != i && self.e[i][j] > 0)
    }

    pub fn predecessor(&self, i: usize) -> Option<usize> {
        (0..self.n()).find(|&j| j != i && self.e[j][i] > 0)
    }

    pub fn block_of(&self, v: usize) -> &Block {
        self.blocks.iter().find(|b| b.vars.contains(&v)).unwrap()
    }

    pub fn group_order(&self) -> i64 {
        self.blocks
            .iter()
            .map(|b| {
                let p: i64 = b.a.iter().product();
                match b.kind {
                    Kind::Loop if b.a.len() % 2 == 1 => p + 1,
                    Kind::Loop => p - 1,
                    _ => p,
                }
            })
            .product()
    }

    /// `Σ (1 - 2 q_j)` of the dual weights.
    pub fn central_charge(&self) -> Q {
        self.qt.iter().fold(Q::zero(), |s, x| s + Q::one() - x * qi(2))
    }

    /// `Π (1/q^T_j - 1)`.
    pub fn dual_milnor(&self) -> Q {
        self.qt.iter().fold(Q::one(), |s, x| s * (x.recip() - Q::one()))
    }

    pub fn degree(&self, m: &[u32]) -> Q {
        m.iter().zip(&self.qt).fold(Q::zero(), |s, (&e, w)| s + w * qi(e as i64))
    }

    /// Sector phases of the insertion `x^m`: `frac(q + E^{-1} m)`.
    pub fn theta(&self, m: &[u32]) -> Vec<Q> {
        (0..self.n())
            .map(|i| {
                let shift = (0..self.n()).fold(Q::zero(), |s, j| s + &self.inv[i][j] * qi(m[j] as i64));
                frac(&(&self.q[i] + shift))
            })
            .collect()
    }

    /// `(k - 2) q_j - Σ θ_j` over the insertions.
    pub fn line_degrees(&self, key: &[Vec<u32>]) -> Vec<Q> {
        let thetas: Vec<Vec<Q>> = key.iter().map(|m| self.theta(m)).collect();
        (0..self.n())
            .map(|j| thetas.iter().fold(&self.q[j] * qi(key.len() as i64 - 2), |s, t| s - &t[j]))
            .collect()
    }

    /// Degree balance plus integrality of every line bundle degree.
    pub fn nonvanishing(&self, key: &[Vec<u32>]) -> bool {
        let total = key.iter().fold(Q::zero(), |s, m| s + self.degree(m));
        total == self.central_charge() + qi(key.len() as i64 - 3)
            && self.line_degrees(key).iter().all(|d| d.is_integer())
    }

    /// Standard vectors by block, as in the basis table.
    pub fn standard_basis(&self) -> Vec<Vector> {
        let mut out = vec![Vector { m: vec![0; self.n()], strata: vec![] }];
        for b in &self.blocks {
            let local = block_vectors(b);
            out = out
                .into_iter()
                .flat_map(|v| {
                    local.iter().map(move |(lm, k)| {
                        let mut w = v.clone();
                        for (l, &var) in b.vars.iter().enumerate() {
                            w.m[var] = lm[l];
                        }
                        w.strata.push(*k);
                        w
                    })
                })
                .collect();
        }
        out
    }

    pub fn socle(&self) -> Vec<u32> {
        let basis = self.standard_basis();
        let top = basis.iter().map(|v| self.degree(&v.m)).max().unwrap();
        let tops: Vec<_> = basis.iter().filter(|v| self.degree(&v.m) == top).collect();
        assert_eq!(tops.len(), 1, "unique top-degree vector");
        tops[0].m.clone()
    }

    pub fn complement(&self, v: &Vector) -> Vec<u32> {
        let s = self.socle();
        let mut out = v.m.clone();
        for (bi, b) in self.blocks.iter().enumerate() {
            let n = b.vars.len();
            let k = v.strata[bi];
            for (l, &var) in b.vars.iter().enumerate() {
                let free = n - 2 * k;
                if b.kind != Kind::Chain || k == 0 {
                    out[var] = s[var] - v.m[var];
                } else if l < free {
                    let top = if l + 1 == free { b.a[l] - 2 } else { b.a[l] - 1 } as u32;
                    out[var] = top - v.m[var];
                }
            }
        }
        out
    }

    /// The normalized residue pairing of two standard vectors from its closed form.
    pub fn residue(&self, v1: &Vector, v2: &Vector) -> Q {
        let partner = self.complement(v1);
        let mut total = Q::one();
        for (bi, b) in self.blocks.iter().enumerate() {
            let n = b.vars.len();
            let l1: Vec<u32> = b.vars.iter().map(|&g| v1.m[g]).collect();
            let l2: Vec<u32> = b.vars.iter().map(|&g| v2.m[g]).collect();
            let lp: Vec<u32> = b.vars.iter().map(|&g| partner[g]).collect();
            let even_loop = b.kind == Kind::Loop && n % 2 == 0;
            let pattern = |odd: bool| -> Vec<u32> {
                (0..n).map(|l| if (l % 2 == 0) == odd { (b.a[l] - 1) as u32 } else { 0 }).collect()
            };
            let signed = |odd: bool| -> Q {
                (0..n).filter(|l| (l % 2 == 0) == odd).fold(Q::one(), |s, l| s * qi(-b.a[l]))
            };
            let value = if even_loop && l1 == l2 && l1 == pattern(true) {
                signed(false)
            } else if even_loop && l1 == l2 && l1 == pattern(false) {
                signed(true)
            } else if l2 == lp {
                let k = v1.strata[bi];
                if b.kind == Kind::Chain && k >= 1 {
                    (0..k).fold(Q::one(), |s, i| s * qi(-b.a[n - 2 * i - 2]))
                } else {
                    Q::one()
                }
            } else {
                Q::zero()
            };
            total *= value;
        }
        total
    }

    /// `T_j` of a four-point decoration.
    pub fn chiodo_t(&self, key: &[Vec<u32>], j: usize) -> Q {
        let th: Vec<Vec<Q>> = key.iter().map(|m| self.theta(m)).collect();
        let mut t = th.iter().fold(Q::zero(), |s, x| s + b2(&x[j]));
        for other in &th[1..] {
            t -= b2(&frac(&(&self.q[j] - &th[0][j] - &other[j])));
        }
        t -= b2(&self.q[j]);
        t / qi(2)
    }

    /// `⟨x_i, x_i, x_p x_i^{a_i-2}, soc⟩`, without checking that it is nonzero in the ring.
    pub fn special_key(&self, i: usize) -> Option<Vec<Vec<u32>>> {
        let b = self.block_of(i);
        let l = b.vars.iter().position(|&v| v == i).unwrap();
        let p = match b.kind {
            Kind::Fermat => None,
            Kind::Chain if l + 1 == b.vars.len() => self.predecessor(i),
            Kind::Chain => return None,
            Kind::Loop => self.predecessor(i),
        };
        let mut vi = vec![0; self.n()];
        vi[i] = 1;
        let mut third = vec![0; self.n()];
        third[i] = (self.a(i) - 2) as u32;
        if let Some(p) = p {
            third[p] += 1;
        }
        let mut key = vec![vi.clone(), vi, third, self.socle()];
        key.sort();
        Some(key)
    }

    /// `𝔉_i` from the Chiodo classes: `-a_p T_p + T_i` for the nonconcave
    /// shapes, `s T_{j0}` for concave keys with `s` fixed on `x^3`.
    pub fn four_point(&self, i: usize) -> Option<Q> {
        let key = self.special_key(i)?;
        let b = self.block_of(i);
        let n = b.vars.len();
        let l = b.vars.iter().position(|&v| v == i).unwrap();
        let nonconcave = self.a(i) == 2
            && match b.kind {
                Kind::Loop => true,
                Kind::Chain => l + 1 == n,
                Kind::Fermat => false,
            };
        if nonconcave {
            let p = self.predecessor(i).unwrap();
            return Some(-qi(self.a(p)) * self.chiodo_t(&key, p) + self.chiodo_t(&key, i));
        }
        let degrees = self.line_degrees(&key);
        let j0: Vec<usize> = (0..self.n()).filter(|&j| degrees[j] == qi(-2)).collect();
        let rest = degrees.iter().all(|d| *d == qi(-1) || *d == qi(-2));
        if j0.len() != 1 || !rest {
            return None;
        }
        Some(concave_sign() * self.chiodo_t(&key, j0[0]))
    }
}

fn concave_sign() -> Q {
    let cubic = Poly::parse("x1^3");
    let key = cubic.special_key(0).unwrap();
    qr(-1, 3) / cubic.chiodo_t(&key, 0)
}

fn find_blocks(e: &[Vec<i64>]) -> Vec<Block> {
    let n = e.len();
    let succ = |i: usize| (0..n).find(|&j| j != i && e[i][j] > 0);
    let pred = |i: usize| (0..n).find(|&j| j != i && e[j][i] > 0);
    let mut seen = vec![false; n];
    let mut blocks = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut first = start;
        let mut steps = 0;
        while let Some(p) = pred(first) {
            first = p;
            steps += 1;
            if first == start || steps > n {
                break;
            }
        }
        let is_loop = pred(start).is_some() && succ(start).is_some() && {
            let mut v = start;
            let mut hit = false;
            for _ in 0..n {
                v = match succ(v) {
                    Some(s) => s,
                    None => break,
                };
                if v == start {
                    hit = true;
                    break;
                }
            }
            hit
        };
        let head = if is_loop { start } else { first };
        let mut vars = vec![head];
        let mut v = head;
        while let Some(s) = succ(v) {
            if s == head {
                break;
            }
            vars.push(s);
            v = s;
        }
        for &v in &vars {
            seen[v] = true;
        }
        let kind = if is_loop {
            Kind::Loop
        } else if vars.len() == 1 {
            Kind::Fermat
        } else {
            Kind::Chain
        };
        let a = vars.iter().map(|&v| e[v][v]).collect();
        blocks.push(Block { kind, vars, a });
    }
    blocks
}

fn boxes(bounds: &[i64]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &b in bounds {
        out = out
            .into_iter()
            .flat_map(|p: Vec<u32>| {
                (0..b.max(0) as u32).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn block_vectors(b: &Block) -> Vec<(Vec<u32>, usize)> {
    let n = b.vars.len();
    match b.kind {
        Kind::Fermat => (0..b.a[0] - 1).map(|m| (vec![m as u32], 0)).collect(),
        Kind::Loop => boxes(&b.a).into_iter().map(|m| (m, 0)).collect(),
        Kind::Chain => {
            let mut out = Vec::new();
            for k in 0..=n / 2 {
                let free = n - 2 * k;
                let bounds: Vec<i64> =
                    (0..free).map(|j| if j + 1 == free { b.a[j] - 1 } else { b.a[j] }).collect();
                for head in boxes(&bounds) {
                    let mut m = head;
                    m.resize(n, 0);
                    for i in 0..k {
                        m[n - 1 - 2 * i] = (b.a[n - 1 - 2 * i] - 1) as u32;
                    }
                    out.push((m, k));
                }
            }
            out
        }
    }
}

/// Incremental reduced row echelon form over exact rationals.
#[derive(Default)]
pub struct Rref {
    rows: Vec<(BTreeMap<usize, Q>, Q)>,
    pivots: BTreeMap<usize, usize>,
    pub contradictions: usize,
}

impl Rref {
    pub fn insert(&mut self, mut row: BTreeMap<usize, Q>, mut rhs: Q) {
        for (&col, &r) in &self.pivots {
            if let Some(c) = row.get(&col).cloned() {
                let (prow, prhs) = &self.rows[r];
                for (k, v) in prow {
                    *row.entry(*k).or_insert_with(Q::zero) -= &c * v;
                }
                rhs -= &c * prhs;
            }
        }
        row.retain(|_, v| !v.is_zero());
        let Some((&col, p)) = row.iter().next().map(|(c, p)| (c, p.clone())) else {
            if !rhs.is_zero() {
                self.contradictions += 1;
            }
            return;
        };
        for v in row.values_mut() {
            *v = &*v / &p;
        }
        rhs /= &p;
        for (other, orhs) in self.rows.iter_mut() {
            if let Some(c) = other.get(&col).cloned() {
                for (k, v) in &row {
                    *other.entry(*k).or_insert_with(Q::zero) -= &c * v;
                }
                other.retain(|_, v| !v.is_zero());
                *orhs -= &c * &rhs;
            }
        }
        self.pivots.insert(col, self.rows.len());
        self.rows.push((row, rhs));
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// The value of `col` if the system forces it.
    pub fn determined(&self, col: usize) -> Option<Q> {
        let r = *self.pivots.get(&col)?;
        let (row, rhs) = &self.rows[r];
        (row.len() == 1).then(|| rhs.clone())
    }
}
