//! Zero-knowledge relations over committed integers.
//!
//! Every gadget compiles to a list of position-tagged [`CdsStatement`]s that
//! both sides can build from public data, plus a prover-side witness search
//! that refuses when the relation does not hold. Bit positions are 0-based and
//! MSB-first.

use rand::RngCore;

use crate::codec::{Reader, Wire, Writer};
use crate::commit::{from_bits, to_bits, BitCommitment, BitOpening, IntCommitment};
use crate::error::{Error, Result};
use crate::group::{GroupElement, RefString};
use crate::sigma::{ni_prove, ni_verify, CdsStatement, CdsWitness, Cell, NiProof};

/// Statements of one gadget instance, tagged by position.
pub type Statements = Vec<(u32, CdsStatement)>;

/// Non-interactive proofs tagged by the position of their statement.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ProofBundle {
    pub proofs: Vec<(u32, NiProof)>,
}

impl Wire for ProofBundle {
    fn write(&self, w: &mut Writer) {
        w.count(self.proofs.len());
        for (pos, p) in &self.proofs {
            w.u32(*pos).put(p);
        }
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let n = r.count()?;
        let proofs = (0..n).map(|_| Ok((r.u32()?, r.get()?))).collect::<Result<_>>()?;
        Ok(ProofBundle { proofs })
    }
}

/// Context of one proof: caller prefix, then label, position and statement.
pub fn proof_context(prefix: &[u8], label: &str, pos: u32, stmt: &CdsStatement) -> Vec<u8> {
    let mut w = Writer::new();
    w.raw(prefix).bytes(label.as_bytes()).u32(pos).put(stmt);
    w.finish()
}

pub fn prove_statements<R: RngCore + ?Sized>(
    rf: &RefString,
    stmts: &Statements,
    wits: &[CdsWitness],
    prefix: &[u8],
    label: &str,
    rng: &mut R,
) -> Result<ProofBundle> {
    let proofs = stmts
        .iter()
        .zip(wits)
        .map(|((pos, stmt), wit)| {
            let ctx = proof_context(prefix, label, *pos, stmt);
            Ok((*pos, ni_prove(rf.params(), stmt, wit, &ctx, rng)?))
        })
        .collect::<Result<_>>()?;
    Ok(ProofBundle { proofs })
}

/// Accepts iff the bundle has exactly one proof per statement, in order, and
/// each verifies.
pub fn verify_statements(rf: &RefString, stmts: &Statements, bundle: &ProofBundle, prefix: &[u8], label: &str) -> bool {
    stmts.len() == bundle.proofs.len()
        && stmts.iter().zip(&bundle.proofs).all(|((pos, stmt), (ppos, proof))| {
            pos == ppos && ni_verify(rf.params(), stmt, proof, &proof_context(prefix, label, *pos, stmt))
        })
}

fn bits_of(ops: &[BitOpening]) -> Vec<bool> {
    ops.iter().map(|o| o.bit).collect()
}

fn base(rf: &RefString, bit: bool) -> GroupElement {
    if bit { rf.h() } else { rf.g() }.clone()
}

fn bound_bits(w: u64, width: usize) -> Result<Vec<bool>> {
    to_bits(w, width).map_err(|_| Error::InvalidInput(format!("bound {w} does not fit in {width} bits")))
}

fn check_openings(com: &IntCommitment, ops: &[BitOpening]) -> Result<()> {
    if com.width() != ops.len() {
        return Err(Error::LengthMismatch { expected: com.width(), got: ops.len() });
    }
    Ok(())
}

/// Index sets for the prefix characterization of comparisons with a public
/// bound: for every position `i` whose bound bit equals `on`, the targets are
/// `i` together with every earlier `j` whose bound bit differs.
fn prefix_sets(wb: &[bool], on: bool) -> Vec<(u32, Vec<usize>)> {
    (0..wb.len())
        .filter(|&i| wb[i] == on)
        .map(|i| {
            let mut set: Vec<usize> = (0..i).filter(|&j| wb[j] != on).collect();
            set.push(i);
            (i as u32, set)
        })
        .collect()
}

fn public_cmp_statements(rf: &RefString, com: &IntCommitment, w: u64, ge: bool) -> Result<Statements> {
    let wb = bound_bits(w, com.width())?;
    let b = base(rf, ge);
    prefix_sets(&wb, ge)
        .into_iter()
        .map(|(pos, set)| {
            let cells = set.iter().map(|&j| Cell::new(b.clone(), com.bits[j].0.clone())).collect();
            Ok((pos, CdsStatement::any_of(cells)?))
        })
        .collect()
}

fn public_cmp_witnesses(ops: &[BitOpening], w: u64, ge: bool) -> Result<Vec<CdsWitness>> {
    let wb = bound_bits(w, ops.len())?;
    prefix_sets(&wb, ge)
        .into_iter()
        .map(|(_, set)| {
            set.iter()
                .position(|&j| ops[j].bit == ge)
                .map(|row| CdsWitness { row, exps: vec![ops[set[row]].r.clone()] })
                .ok_or_else(|| {
                    let s = from_bits(&bits_of(ops));
                    let rel = if ge { ">=" } else { "<=" };
                    Error::RefuseToProve(format!("committed value {s} is not {rel} {w}"))
                })
        })
        .collect()
}

/// `s >= w`: one OR proof per 1-bit of `w`, over `{C_j : j = i or (j < i and w_j = 0)}`
/// with base h.
pub fn ge_public_statements(rf: &RefString, com: &IntCommitment, w: u64) -> Result<Statements> {
    public_cmp_statements(rf, com, w, true)
}

pub fn ge_public_witnesses(ops: &[BitOpening], w: u64) -> Result<Vec<CdsWitness>> {
    public_cmp_witnesses(ops, w, true)
}

/// `s <= w`: one OR proof per 0-bit of `w`, over `{C_j : j = i or (j < i and w_j = 1)}`
/// with base g.
pub fn le_public_statements(rf: &RefString, com: &IntCommitment, w: u64) -> Result<Statements> {
    public_cmp_statements(rf, com, w, false)
}

pub fn le_public_witnesses(ops: &[BitOpening], w: u64) -> Result<Vec<CdsWitness>> {
    public_cmp_witnesses(ops, w, false)
}

pub fn prove_ge_public<R: RngCore + ?Sized>(
    rf: &RefString,
    com: &IntCommitment,
    ops: &[BitOpening],
    w: u64,
    prefix: &[u8],
    rng: &mut R,
) -> Result<ProofBundle> {
    check_openings(com, ops)?;
    let wits = ge_public_witnesses(ops, w)?;
    prove_statements(rf, &ge_public_statements(rf, com, w)?, &wits, prefix, "ge-public", rng)
}

pub fn verify_ge_public(rf: &RefString, com: &IntCommitment, w: u64, prefix: &[u8], bundle: &ProofBundle) -> bool {
    ge_public_statements(rf, com, w).is_ok_and(|s| verify_statements(rf, &s, bundle, prefix, "ge-public"))
}

pub fn prove_le_public<R: RngCore + ?Sized>(
    rf: &RefString,
    com: &IntCommitment,
    ops: &[BitOpening],
    w: u64,
    prefix: &[u8],
    rng: &mut R,
) -> Result<ProofBundle> {
    check_openings(com, ops)?;
    let wits = le_public_witnesses(ops, w)?;
    prove_statements(rf, &le_public_statements(rf, com, w)?, &wits, prefix, "le-public", rng)
}

pub fn verify_le_public(rf: &RefString, com: &IntCommitment, w: u64, prefix: &[u8], bundle: &ProofBundle) -> bool {
    le_public_statements(rf, com, w).is_ok_and(|s| verify_statements(rf, &s, bundle, prefix, "le-public"))
}

/// `a <= b` for two committed values. Position `i` has rows
/// `[log_g A_i]`, `[log_h B_i]` and, for each `j < i`, `[log_g A_j, log_h B_j]`.
pub fn le_committed_statements(rf: &RefString, a: &IntCommitment, b: &IntCommitment) -> Result<Statements> {
    if a.width() != b.width() {
        return Err(Error::InvalidInput("comparison of commitments with different widths".into()));
    }
    let (g, h) = (rf.g(), rf.h());
    (0..a.width())
        .map(|i| {
            let mut rows =
                vec![vec![Cell::new(g.clone(), a.bits[i].0.clone())], vec![Cell::new(h.clone(), b.bits[i].0.clone())]];
            for j in 0..i {
                rows.push(vec![Cell::new(g.clone(), a.bits[j].0.clone()), Cell::new(h.clone(), b.bits[j].0.clone())]);
            }
            Ok((i as u32, CdsStatement::new(rows)?))
        })
        .collect()
}

pub fn le_committed_witnesses(a: &[BitOpening], b: &[BitOpening]) -> Result<Vec<CdsWitness>> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput("comparison of commitments with different widths".into()));
    }
    (0..a.len())
        .map(|i| {
            if !a[i].bit {
                return Ok(CdsWitness { row: 0, exps: vec![a[i].r.clone()] });
            }
            if b[i].bit {
                return Ok(CdsWitness { row: 1, exps: vec![b[i].r.clone()] });
            }
            (0..i)
                .find(|&j| !a[j].bit && b[j].bit)
                .map(|j| CdsWitness { row: 2 + j, exps: vec![a[j].r.clone(), b[j].r.clone()] })
                .ok_or_else(|| {
                    Error::RefuseToProve(format!(
                        "committed {} is not <= committed {}",
                        from_bits(&bits_of(a)),
                        from_bits(&bits_of(b))
                    ))
                })
        })
        .collect()
}

pub fn prove_le_committed<R: RngCore + ?Sized>(
    rf: &RefString,
    a: &IntCommitment,
    a_ops: &[BitOpening],
    b: &IntCommitment,
    b_ops: &[BitOpening],
    prefix: &[u8],
    rng: &mut R,
) -> Result<ProofBundle> {
    check_openings(a, a_ops)?;
    check_openings(b, b_ops)?;
    let wits = le_committed_witnesses(a_ops, b_ops)?;
    prove_statements(rf, &le_committed_statements(rf, a, b)?, &wits, prefix, "le-committed", rng)
}

pub fn verify_le_committed(
    rf: &RefString,
    a: &IntCommitment,
    b: &IntCommitment,
    prefix: &[u8],
    bundle: &ProofBundle,
) -> bool {
    le_committed_statements(rf, a, b).is_ok_and(|s| verify_statements(rf, &s, bundle, prefix, "le-committed"))
}

/// A truth table: the committed bits must form one of the allowed rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateSpec {
    arity: usize,
    allowed: Vec<Vec<bool>>,
}

impl GateSpec {
    pub fn new(arity: usize, mut allowed: Vec<Vec<bool>>) -> Result<Self> {
        allowed.sort();
        allowed.dedup();
        if arity == 0 || allowed.is_empty() || allowed.iter().any(|r| r.len() != arity) {
            return Err(Error::InvalidInput("gate needs a nonempty table of rows of its arity".into()));
        }
        Ok(GateSpec { arity, allowed })
    }

    /// Gate allowing every assignment for which `pred` holds.
    pub fn from_predicate(arity: usize, pred: impl Fn(&[bool]) -> bool) -> Result<Self> {
        let rows = (0..1u64 << arity).map(|x| to_bits(x, arity).expect("fits")).filter(|r| pred(r)).collect();
        Self::new(arity, rows)
    }

    /// Single-bit gate asserting the committed bit equals `bit`.
    pub fn constant(bit: bool) -> Self {
        GateSpec { arity: 1, allowed: vec![vec![bit]] }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn allowed(&self) -> &[Vec<bool>] {
        &self.allowed
    }
}

/// One row per allowed assignment; cell `j` uses base g or h per the bit.
pub fn gate_statement(rf: &RefString, coms: &[BitCommitment], spec: &GateSpec) -> Result<CdsStatement> {
    if coms.len() != spec.arity {
        return Err(Error::LengthMismatch { expected: spec.arity, got: coms.len() });
    }
    let rows = spec
        .allowed
        .iter()
        .map(|row| row.iter().zip(coms).map(|(&bit, c)| Cell::new(base(rf, bit), c.0.clone())).collect())
        .collect();
    CdsStatement::new(rows)
}

pub fn gate_witness(ops: &[BitOpening], spec: &GateSpec) -> Result<CdsWitness> {
    let bits = bits_of(ops);
    let row = spec
        .allowed
        .iter()
        .position(|r| *r == bits)
        .ok_or_else(|| Error::RefuseToProve(format!("assignment {bits:?} is not an allowed gate row")))?;
    Ok(CdsWitness { row, exps: ops.iter().map(|o| o.r.clone()).collect() })
}

pub fn prove_gate<R: RngCore + ?Sized>(
    rf: &RefString,
    coms: &[BitCommitment],
    ops: &[BitOpening],
    spec: &GateSpec,
    prefix: &[u8],
    rng: &mut R,
) -> Result<NiProof> {
    let stmt = gate_statement(rf, coms, spec)?;
    let wit = gate_witness(ops, spec)?;
    ni_prove(rf.params(), &stmt, &wit, &proof_context(prefix, "gate", 0, &stmt), rng)
}

pub fn verify_gate(rf: &RefString, coms: &[BitCommitment], spec: &GateSpec, prefix: &[u8], proof: &NiProof) -> bool {
    gate_statement(rf, coms, spec)
        .is_ok_and(|stmt| ni_verify(rf.params(), &stmt, proof, &proof_context(prefix, "gate", 0, &stmt)))
}

fn majority(a: bool, b: bool, c: bool) -> bool {
    (a as u8 + b as u8 + c as u8) >= 2
}

/// Per-position adder gates for an announced sum. The sum has `width + 1`
/// bits; bit 0 is the final carry. At position `i` the gate covers
/// `(a_i, b_i, c_i, c_{i+1})`; at the least significant position the incoming
/// carry is 0, so the gate has arity 3. A last single-bit gate (position
/// `width`) pins `c_0` to the top bit of the sum.
pub fn sum_gates(width: usize, sum: u64) -> Result<Vec<GateSpec>> {
    if width == 0 {
        return Err(Error::InvalidInput("sum of zero-width values".into()));
    }
    let sb = bound_bits(sum, width + 1)?;
    let mut gates = Vec::with_capacity(width + 1);
    for i in 0..width {
        let target = sb[i + 1];
        let gate = if i + 1 < width {
            GateSpec::from_predicate(4, |r| r[0] ^ r[1] ^ r[3] == target && r[2] == majority(r[0], r[1], r[3]))?
        } else {
            GateSpec::from_predicate(3, |r| r[0] ^ r[1] == target && r[2] == (r[0] & r[1]))?
        };
        gates.push(gate);
    }
    gates.push(GateSpec::constant(sb[0]));
    Ok(gates)
}

fn chain_coms(a: &IntCommitment, b: &IntCommitment, chain: &IntCommitment, i: usize) -> Vec<BitCommitment> {
    let mut v = vec![a.bits[i].clone(), b.bits[i].clone(), chain.bits[i].clone()];
    if i + 1 < a.width() {
        v.push(chain.bits[i + 1].clone());
    }
    v
}

fn chain_ops(a: &[BitOpening], b: &[BitOpening], chain: &[BitOpening], i: usize) -> Vec<BitOpening> {
    let mut v = vec![a[i].clone(), b[i].clone(), chain[i].clone()];
    if i + 1 < a.len() {
        v.push(chain[i + 1].clone());
    }
    v
}

fn chain_statements(
    rf: &RefString,
    a: &IntCommitment,
    b: &IntCommitment,
    chain: &IntCommitment,
    gates: &[GateSpec],
) -> Result<Statements> {
    let w = a.width();
    if b.width() != w || chain.width() != w || gates.len() != w + 1 {
        return Err(Error::InvalidInput("operand, chain and gate widths differ".into()));
    }
    let mut out = Vec::with_capacity(w + 1);
    for (i, gate) in gates.iter().take(w).enumerate() {
        out.push((i as u32, gate_statement(rf, &chain_coms(a, b, chain, i), gate)?));
    }
    out.push((w as u32, gate_statement(rf, &chain.bits[..1], &gates[w])?));
    Ok(out)
}

fn chain_witnesses(
    a: &[BitOpening],
    b: &[BitOpening],
    chain: &[BitOpening],
    gates: &[GateSpec],
) -> Result<Vec<CdsWitness>> {
    let w = a.len();
    let mut out = Vec::with_capacity(w + 1);
    for (i, gate) in gates.iter().take(w).enumerate() {
        out.push(gate_witness(&chain_ops(a, b, chain, i), gate)?);
    }
    out.push(gate_witness(&chain[..1], &gates[w])?);
    Ok(out)
}

/// Announced sum of two committed values with committed carries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumProof {
    pub sum: u64,
    pub carries: IntCommitment,
    pub bundle: ProofBundle,
}

/// Carry bits `c_0..c_{w-1}` where `c_i` is the carry out of position `i`.
pub fn carry_bits(a: &[bool], b: &[bool]) -> Vec<bool> {
    let w = a.len();
    let mut c = vec![false; w];
    let mut carry_in = false;
    for i in (0..w).rev() {
        c[i] = majority(a[i], b[i], carry_in);
        carry_in = c[i];
    }
    c
}

pub fn sum_statements(
    rf: &RefString,
    a: &IntCommitment,
    b: &IntCommitment,
    sum: u64,
    carries: &IntCommitment,
) -> Result<Statements> {
    chain_statements(rf, a, b, carries, &sum_gates(a.width(), sum)?)
}

pub fn prove_sum<R: RngCore + ?Sized>(
    rf: &RefString,
    a: &IntCommitment,
    a_ops: &[BitOpening],
    b: &IntCommitment,
    b_ops: &[BitOpening],
    prefix: &[u8],
    rng: &mut R,
) -> Result<SumProof> {
    check_openings(a, a_ops)?;
    check_openings(b, b_ops)?;
    if a.width() != b.width() {
        return Err(Error::InvalidInput("sum of commitments with different widths".into()));
    }
    let sum = from_bits(&bits_of(a_ops)) + from_bits(&bits_of(b_ops));
    prove_sum_claim(rf, a, a_ops, b, b_ops, sum, prefix, rng)
}

/// Proves a caller-chosen sum; refuses unless it is the true sum.
#[allow(clippy::too_many_arguments)]
pub fn prove_sum_claim<R: RngCore + ?Sized>(
    rf: &RefString,
    a: &IntCommitment,
    a_ops: &[BitOpening],
    b: &IntCommitment,
    b_ops: &[BitOpening],
    sum: u64,
    prefix: &[u8],
    rng: &mut R,
) -> Result<SumProof> {
    let (carries, c_ops) = crate::commit::commit_bits(rf, &carry_bits(&bits_of(a_ops), &bits_of(b_ops)), rng);
    let gates = sum_gates(a.width(), sum)?;
    let stmts = chain_statements(rf, a, b, &carries, &gates)?;
    let wits = chain_witnesses(a_ops, b_ops, &c_ops, &gates)?;
    let bundle = prove_statements(rf, &stmts, &wits, prefix, "sum", rng)?;
    Ok(SumProof { sum, carries, bundle })
}

pub fn verify_sum(rf: &RefString, a: &IntCommitment, b: &IntCommitment, proof: &SumProof, prefix: &[u8]) -> bool {
    sum_statements(rf, a, b, proof.sum, &proof.carries)
        .is_ok_and(|s| verify_statements(rf, &s, &proof.bundle, prefix, "sum"))
}

/// Borrow chain of `z - s`: `b_i` is the borrow out of position `i`.
pub fn borrow_bits(z: &[bool], s: &[bool]) -> Vec<bool> {
    let w = z.len();
    let mut b = vec![false; w];
    let mut borrow_in = false;
    for i in (0..w).rev() {
        b[i] = (z[i] as i8) - (s[i] as i8) - (borrow_in as i8) < 0;
        borrow_in = b[i];
    }
    b
}

/// Subtractor gates over `(z_i, s_i, b_i, b_{i+1})` (arity 3 at the least
/// significant position) plus a single-bit gate on `b_0` for the verdict.
pub fn lt_gates(width: usize, verdict: bool) -> Result<Vec<GateSpec>> {
    if width == 0 {
        return Err(Error::InvalidInput("comparison of zero-width values".into()));
    }
    let mut gates = Vec::with_capacity(width + 1);
    for i in 0..width {
        let gate = if i + 1 < width {
            GateSpec::from_predicate(4, |r| r[2] == ((r[0] as i8) - (r[1] as i8) - (r[3] as i8) < 0))?
        } else {
            GateSpec::from_predicate(3, |r| r[2] == (!r[0] & r[1]))?
        };
        gates.push(gate);
    }
    gates.push(GateSpec::constant(verdict));
    Ok(gates)
}

/// Public verdict `z < s` with committed borrows. Difference bits are never
/// committed or announced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LtProof {
    pub verdict: bool,
    pub borrows: IntCommitment,
    pub bundle: ProofBundle,
}

pub fn lt_statements(
    rf: &RefString,
    z: &IntCommitment,
    s: &IntCommitment,
    verdict: bool,
    borrows: &IntCommitment,
) -> Result<Statements> {
    chain_statements(rf, z, s, borrows, &lt_gates(z.width(), verdict)?)
}

pub fn prove_lt_committed<R: RngCore + ?Sized>(
    rf: &RefString,
    z: &IntCommitment,
    z_ops: &[BitOpening],
    s: &IntCommitment,
    s_ops: &[BitOpening],
    prefix: &[u8],
    rng: &mut R,
) -> Result<LtProof> {
    let verdict = from_bits(&bits_of(z_ops)) < from_bits(&bits_of(s_ops));
    prove_lt_claim(rf, z, z_ops, s, s_ops, verdict, prefix, rng)
}

/// Proves a caller-chosen verdict; refuses unless it is the true one.
#[allow(clippy::too_many_arguments)]
pub fn prove_lt_claim<R: RngCore + ?Sized>(
    rf: &RefString,
    z: &IntCommitment,
    z_ops: &[BitOpening],
    s: &IntCommitment,
    s_ops: &[BitOpening],
    verdict: bool,
    prefix: &[u8],
    rng: &mut R,
) -> Result<LtProof> {
    check_openings(z, z_ops)?;
    check_openings(s, s_ops)?;
    if z.width() != s.width() {
        return Err(Error::InvalidInput("comparison of commitments with different widths".into()));
    }
    let (borrows, b_ops) = crate::commit::commit_bits(rf, &borrow_bits(&bits_of(z_ops), &bits_of(s_ops)), rng);
    let gates = lt_gates(z.width(), verdict)?;
    let stmts = chain_statements(rf, z, s, &borrows, &gates)?;
    let wits = chain_witnesses(z_ops, s_ops, &b_ops, &gates)?;
    let bundle = prove_statements(rf, &stmts, &wits, prefix, "lt", rng)?;
    Ok(LtProof { verdict, borrows, bundle })
}

pub fn verify_lt_committed(
    rf: &RefString,
    z: &IntCommitment,
    s: &IntCommitment,
    proof: &LtProof,
    prefix: &[u8],
) -> bool {
    lt_statements(rf, z, s, proof.verdict, &proof.borrows)
        .is_ok_and(|st| verify_statements(rf, &st, &proof.bundle, prefix, "lt"))
}

/// Commitments `R` to `x` and `R'` to `1 - x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplementPair {
    pub r_com: BitCommitment,
    pub rp_com: BitCommitment,
}

impl Wire for ComplementPair {
    fn write(&self, w: &mut Writer) {
        w.put(&self.r_com).put(&self.rp_com);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(ComplementPair { r_com: r.get()?, rp_com: r.get()? })
    }
}

pub fn complement_commit<R: RngCore + ?Sized>(
    rf: &RefString,
    bit: bool,
    rng: &mut R,
) -> (ComplementPair, [BitOpening; 2]) {
    let (r_com, r_op) = crate::commit::commit_bit_random(rf, bit, rng);
    let (rp_com, rp_op) = crate::commit::commit_bit_random(rf, !bit, rng);
    (ComplementPair { r_com, rp_com }, [r_op, rp_op])
}

/// Two OR proofs per pair: a base-g log of one of `{R, R'}` and a base-h log
/// of one of `{R, R'}`. Positions are `2k` and `2k + 1` for pair `k`.
pub fn complement_statements(rf: &RefString, pairs: &[ComplementPair]) -> Result<Statements> {
    let mut out = Vec::with_capacity(2 * pairs.len());
    for (k, pair) in pairs.iter().enumerate() {
        for (t, b) in [rf.g(), rf.h()].into_iter().enumerate() {
            let stmt = CdsStatement::any_of(vec![
                Cell::new(b.clone(), pair.r_com.0.clone()),
                Cell::new(b.clone(), pair.rp_com.0.clone()),
            ])?;
            out.push(((2 * k + t) as u32, stmt));
        }
    }
    Ok(out)
}

pub fn complement_witnesses(ops: &[[BitOpening; 2]]) -> Result<Vec<CdsWitness>> {
    let mut out = Vec::with_capacity(2 * ops.len());
    for pair in ops {
        for want in [false, true] {
            let row = pair
                .iter()
                .position(|o| o.bit == want)
                .ok_or_else(|| Error::RefuseToProve("pair does not commit to complementary bits".into()))?;
            out.push(CdsWitness { row, exps: vec![pair[row].r.clone()] });
        }
    }
    Ok(out)
}

pub fn prove_complement<R: RngCore + ?Sized>(
    rf: &RefString,
    pairs: &[ComplementPair],
    ops: &[[BitOpening; 2]],
    prefix: &[u8],
    rng: &mut R,
) -> Result<ProofBundle> {
    if pairs.len() != ops.len() {
        return Err(Error::LengthMismatch { expected: pairs.len(), got: ops.len() });
    }
    let wits = complement_witnesses(ops)?;
    prove_statements(rf, &complement_statements(rf, pairs)?, &wits, prefix, "complement", rng)
}

pub fn verify_complement(rf: &RefString, pairs: &[ComplementPair], prefix: &[u8], bundle: &ProofBundle) -> bool {
    complement_statements(rf, pairs).is_ok_and(|s| verify_statements(rf, &s, bundle, prefix, "complement"))
}

/// Verified complement pairs combined with a public mask `y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommittedCoin {
    pub pairs: Vec<ComplementPair>,
    pub y: Vec<bool>,
    pub z_com: IntCommitment,
}

/// Commitment to `z = x xor y`: `R_i` where `y_i = 0`, else `R'_i`. The caller
/// must have verified the pairs; `verified` makes that explicit.
pub fn coin_flip(pairs: &[ComplementPair], y: &[bool], verified: bool) -> Result<CommittedCoin> {
    if !verified {
        return Err(Error::UnverifiedPairs);
    }
    if pairs.len() != y.len() {
        return Err(Error::LengthMismatch { expected: pairs.len(), got: y.len() });
    }
    let bits = pairs.iter().zip(y).map(|(p, &yi)| if yi { p.rp_com.clone() } else { p.r_com.clone() }).collect();
    Ok(CommittedCoin { pairs: pairs.to_vec(), y: y.to_vec(), z_com: IntCommitment { bits } })
}

/// Seller-side openings of the selected coin commitment.
pub fn coin_openings(ops: &[[BitOpening; 2]], y: &[bool]) -> Vec<BitOpening> {
    ops.iter().zip(y).map(|(pair, &yi)| pair[yi as usize].clone()).collect()
}
