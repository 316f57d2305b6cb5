//! Parsing, validation, atomic decomposition and the transposed (dual) polynomial.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};

use crate::error::PolyError;
use crate::linalg::{inverse, mat_vec, Matrix};
use crate::sparse::format_monomial;
use crate::Q;

/// A parsed polynomial before any validation: one exponent vector per monomial,
/// in the order they were written. Every coefficient is 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPolynomial {
    pub nvars: usize,
    pub monomials: Vec<Vec<u32>>,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn error(&self, message: impl Into<String>) -> PolyError {
        PolyError::Syntax { pos: self.pos, message: message.into() }
    }

    fn integer(&mut self) -> Result<(usize, String), PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.text[start..self.pos]).expect("ascii digits");
        Ok((start, digits.to_string()))
    }

    fn small_integer(&mut self) -> Result<(usize, u32), PolyError> {
        let (start, digits) = self.integer()?;
        digits
            .parse::<u32>()
            .map(|v| (start, v))
            .map_err(|_| PolyError::Syntax { pos: start, message: "integer too large".into() })
    }

    /// factor := VAR ('^' INT)? ; a bare integer is accepted only to report it as a coefficient.
    fn factor(&mut self, exps: &mut BTreeMap<usize, u32>) -> Result<(), PolyError> {
        match self.peek() {
            Some(b'x') => {
                self.pos += 1;
                let (start, index) = self.small_integer()?;
                if index == 0 {
                    return Err(PolyError::ZeroVariable { pos: start });
                }
                let power = if self.peek() == Some(b'^') {
                    self.pos += 1;
                    self.small_integer()?.1
                } else {
                    1
                };
                *exps.entry(index as usize - 1).or_insert(0) += power;
                Ok(())
            }
            Some(c) if c.is_ascii_digit() => {
                let (start, digits) = self.integer()?;
                if digits.trim_start_matches('0') != "1" {
                    return Err(PolyError::NonUnitCoefficient { pos: start, coefficient: digits });
                }
                Ok(())
            }
            Some(_) => Err(self.error("expected a variable x<k>")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn term(&mut self) -> Result<(usize, BTreeMap<usize, u32>), PolyError> {
        self.skip_ws();
        let start = self.pos;
        let mut exps = BTreeMap::new();
        self.factor(&mut exps)?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            self.factor(&mut exps)?;
        }
        exps.retain(|_, e| *e > 0);
        Ok((start, exps))
    }
}

/// Parses `poly := term ('+' term)*`, `term := factor ('*' factor)*`,
/// `factor := 'x' INT ('^' INT)?`, ignoring whitespace.
pub fn parse_polynomial(text: &str) -> Result<RawPolynomial, PolyError> {
    let mut parser = Parser { text: text.as_bytes(), pos: 0 };
    let mut terms = vec![parser.term()?];
    while let Some(c) = parser.peek() {
        if c != b'+' {
            return Err(parser.error(format!("unexpected character '{}'", c as char)));
        }
        parser.pos += 1;
        terms.push(parser.term()?);
    }
    let nvars = terms
        .iter()
        .filter_map(|(_, e)| e.keys().next_back())
        .max()
        .map_or(0, |&v| v + 1);
    let mut seen: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut monomials = Vec::new();
    for (start, exps) in terms {
        let mut row = vec![0; nvars];
        for (v, e) in exps {
            row[v] = e;
        }
        if seen.insert(row.clone(), start).is_some() {
            return Err(PolyError::NonUnitCoefficient { pos: start, coefficient: "2".into() });
        }
        monomials.push(row);
    }
    Ok(RawPolynomial { nvars, monomials })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    Fermat,
    Chain,
    Loop,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            BlockKind::Fermat => "fermat",
            BlockKind::Chain => "chain",
            BlockKind::Loop => "loop",
        };
        f.write_str(name)
    }
}

/// One atomic summand. `vars[k]` is the (0-based) variable playing the role of
/// `x_{k+1}` in the standard form of its kind and `exponents[k]` is its exponent.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AtomicBlock {
    pub kind: BlockKind,
    pub exponents: Vec<u32>,
    pub vars: Vec<usize>,
}

impl AtomicBlock {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Order of the maximal diagonal symmetry group of this block.
    pub fn group_order(&self) -> u64 {
        let prod: u64 = self.exponents.iter().map(|&a| a as u64).product();
        match self.kind {
            BlockKind::Fermat | BlockKind::Chain => prod,
            BlockKind::Loop if self.len() % 2 == 1 => prod + 1,
            BlockKind::Loop => prod - 1,
        }
    }

    /// Position of a global variable inside this block.
    pub fn local(&self, var: usize) -> Option<usize> {
        self.vars.iter().position(|&v| v == var)
    }
}

/// A validated invertible polynomial. Row `i` of the matrix is the monomial led
/// by `x_{i+1}`, i.e. the one in which `x_{i+1}` carries the exponent `a_i ≥ 2`.
#[derive(Debug, Clone, Eq)]
pub struct InvertiblePolynomial {
    matrix: Vec<Vec<u32>>,
    blocks: Vec<AtomicBlock>,
    input_order: Vec<usize>,
}

impl PartialEq for InvertiblePolynomial {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl InvertiblePolynomial {
    pub fn nvars(&self) -> usize {
        self.matrix.len()
    }

    pub fn matrix(&self) -> &[Vec<u32>] {
        &self.matrix
    }

    pub fn rational_matrix(&self) -> Matrix<Q> {
        self.matrix
            .iter()
            .map(|row| row.iter().map(|&e| Q::from_integer(e.into())).collect())
            .collect()
    }

    pub fn blocks(&self) -> &[AtomicBlock] {
        &self.blocks
    }

    /// For each row, the position of that monomial in the original text.
    pub fn input_order(&self) -> &[usize] {
        &self.input_order
    }

    /// The diagonal exponent `a_i` of variable `i`.
    pub fn exponent(&self, var: usize) -> u32 {
        self.matrix[var][var]
    }

    /// The variable `t(i)` appearing linearly next to `x_i^{a_i}`, if any.
    pub fn target(&self, var: usize) -> Option<usize> {
        (0..self.nvars()).find(|&j| j != var && self.matrix[var][j] > 0)
    }

    pub fn block_of(&self, var: usize) -> (usize, &AtomicBlock) {
        self.blocks
            .iter()
            .enumerate()
            .find(|(_, b)| b.vars.contains(&var))
            .expect("every variable belongs to a block")
    }

    pub fn is_atomic(&self) -> bool {
        self.blocks.len() == 1
    }

    /// Builds a validated polynomial from exponent rows given in any order.
    pub fn from_raw(raw: &RawPolynomial) -> Result<Self, PolyError> {
        let n = raw.nvars;
        if raw.monomials.len() != n || n == 0 {
            return Err(PolyError::MonomialCount { variables: n, monomials: raw.monomials.len() });
        }
        let mut leaders = Vec::with_capacity(n);
        for (idx, row) in raw.monomials.iter().enumerate() {
            let support: Vec<usize> = (0..n).filter(|&j| row[j] > 0).collect();
            if support.len() > 2 {
                return Err(PolyError::TooManyVariables { monomial: idx + 1, count: support.len() });
            }
            let big: Vec<usize> = support.iter().copied().filter(|&j| row[j] >= 2).collect();
            match big.as_slice() {
                [] => return Err(PolyError::NoLeadingExponent { monomial: idx + 1 }),
                [lead] => leaders.push(*lead),
                _ => {
                    let exponent = big.iter().map(|&j| row[j]).min().unwrap_or(0);
                    return Err(PolyError::SecondaryExponent { monomial: idx + 1, exponent });
                }
            }
        }
        let e: Matrix<Q> = raw
            .monomials
            .iter()
            .map(|row| row.iter().map(|&x| Q::from_integer(x.into())).collect())
            .collect();
        let inv = inverse(&e).ok_or(PolyError::Singular)?;
        let q = mat_vec(&inv, &vec![Q::one(); n]);
        if let Some((index, value)) = q.iter().enumerate().find(|(_, v)| !v.is_positive()) {
            return Err(PolyError::NonPositiveWeight { index: index + 1, value: value.to_string() });
        }
        for var in 0..n {
            let count = leaders.iter().filter(|&&l| l == var).count();
            if count != 1 {
                return Err(PolyError::Leading { variable: var + 1, count });
            }
        }
        let mut matrix = vec![Vec::new(); n];
        let mut input_order = vec![0; n];
        for (idx, &lead) in leaders.iter().enumerate() {
            matrix[lead] = raw.monomials[idx].clone();
            input_order[lead] = idx;
        }
        let blocks = decompose(&matrix)?;
        Ok(InvertiblePolynomial { matrix, blocks, input_order })
    }

    /// The polynomial with transposed exponent matrix.
    pub fn dual(&self) -> InvertiblePolynomial {
        let n = self.nvars();
        let monomials = (0..n).map(|i| (0..n).map(|j| self.matrix[j][i]).collect()).collect();
        InvertiblePolynomial::from_raw(&RawPolynomial { nvars: n, monomials })
            .expect("the transpose of an invertible polynomial is invertible")
    }

    /// The monomial rows, in leading-variable order.
    pub fn monomials(&self) -> impl Iterator<Item = &[u32]> {
        self.matrix.iter().map(Vec::as_slice)
    }
}

fn decompose(matrix: &[Vec<u32>]) -> Result<Vec<AtomicBlock>, PolyError> {
    let n = matrix.len();
    let target: Vec<Option<usize>> =
        (0..n).map(|i| (0..n).find(|&j| j != i && matrix[i][j] > 0)).collect();
    let mut indegree = vec![0usize; n];
    for t in target.iter().flatten() {
        indegree[*t] += 1;
    }
    if let Some(var) = (0..n).find(|&v| indegree[v] > 1) {
        return Err(PolyError::BadComponent { variable: var + 1 });
    }
    let mut visited = vec![false; n];
    let mut blocks = Vec::new();
    for start in (0..n).filter(|&v| indegree[v] == 0) {
        let mut vars = vec![start];
        visited[start] = true;
        let mut cur = start;
        while let Some(next) = target[cur] {
            vars.push(next);
            visited[next] = true;
            cur = next;
        }
        let kind = if vars.len() == 1 { BlockKind::Fermat } else { BlockKind::Chain };
        let exponents = vars.iter().map(|&v| matrix[v][v]).collect();
        blocks.push(AtomicBlock { kind, exponents, vars });
    }
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut vars = vec![start];
        visited[start] = true;
        let mut cur = start;
        loop {
            let next = target[cur].ok_or(PolyError::BadComponent { variable: cur + 1 })?;
            if next == start {
                break;
            }
            vars.push(next);
            visited[next] = true;
            cur = next;
        }
        let exponents = vars.iter().map(|&v| matrix[v][v]).collect();
        blocks.push(AtomicBlock { kind: BlockKind::Loop, exponents, vars });
    }
    blocks.sort_by_key(|b| *b.vars.iter().min().expect("blocks are nonempty"));
    Ok(blocks)
}

impl FromStr for InvertiblePolynomial {
    type Err = PolyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InvertiblePolynomial::from_raw(&parse_polynomial(s)?)
    }
}

impl fmt::Display for InvertiblePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self.matrix.iter().map(|row| format_monomial(row)).collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// Restriction of a polynomial to a subset of variables: keeps the monomials
/// supported there, renumbering variables in increasing order.
pub fn restrict(w: &InvertiblePolynomial, vars: &[usize]) -> RawPolynomial {
    let monomials = w
        .monomials()
        .filter(|row| row.iter().enumerate().all(|(j, &e)| e == 0 || vars.contains(&j)))
        .map(|row| vars.iter().map(|&v| row[v]).collect())
        .collect();
    RawPolynomial { nvars: vars.len(), monomials }
}
