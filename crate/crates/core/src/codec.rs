//! Canonical byte encoding of protocol objects, framing, Fiat-Shamir contexts
//! and the text transcript format.
//!
//! Integers are a 4-byte big-endian length followed by the minimal big-endian
//! magnitude (zero is the empty string). Counts are 4-byte big-endian. Group
//! elements are integers that must be subgroup members when decoded.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_bigint::BigUint;
use num_traits::Zero;

use crate::commit::{BitCommitment, BitOpening, IntCommitment};
use crate::error::{Error, Result};
use crate::group::{derive_generators, GroupElement, GroupParams, RefString};
use crate::sigma::{CdsStatement, Cell, NiProof, SigmaFirst, SigmaResponse};

/// Upper bound on any decoded count, so corrupt lengths fail fast instead of
/// allocating.
const MAX_COUNT: u32 = 1 << 20;

#[derive(Default, Debug, Clone)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, x: u8) -> &mut Self {
        self.buf.push(x);
        self
    }

    pub fn u32(&mut self, x: u32) -> &mut Self {
        self.buf.extend_from_slice(&x.to_be_bytes());
        self
    }

    pub fn count(&mut self, n: usize) -> &mut Self {
        self.u32(u32::try_from(n).expect("count fits in u32"))
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, b: &[u8]) -> &mut Self {
        self.count(b.len());
        self.buf.extend_from_slice(b);
        self
    }

    pub fn raw(&mut self, b: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(b);
        self
    }

    pub fn int(&mut self, x: &BigUint) -> &mut Self {
        if x.is_zero() {
            self.u32(0)
        } else {
            self.bytes(&x.to_bytes_be())
        }
    }

    pub fn u64(&mut self, x: u64) -> &mut Self {
        self.int(&BigUint::from(x))
    }

    pub fn put<T: Wire>(&mut self, x: &T) -> &mut Self {
        x.write(self);
        self
    }

    pub fn list<T: Wire>(&mut self, xs: &[T]) -> &mut Self {
        self.count(xs.len());
        for x in xs {
            x.write(self);
        }
        self
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    params: &'a GroupParams,
}

impl<'a> Reader<'a> {
    pub fn new(params: &'a GroupParams, buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0, params }
    }

    pub fn params(&self) -> &'a GroupParams {
        self.params
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    pub fn err(&self, reason: impl Into<String>) -> Error {
        Error::Malformed { offset: self.pos, reason: reason.into() }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(format!("need {n} bytes, {} left", self.buf.len() - self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    pub fn count(&mut self) -> Result<usize> {
        let at = self.pos;
        let n = self.u32()?;
        if n > MAX_COUNT {
            return Err(Error::Malformed { offset: at, reason: format!("count {n} too large") });
        }
        Ok(n as usize)
    }

    pub fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.count()?;
        self.take(n)
    }

    pub fn raw(&mut self, n: usize) -> Result<&'a [u8]> {
        self.take(n)
    }

    pub fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            x => Err(Error::Malformed { offset: self.pos - 1, reason: format!("bad boolean {x}") }),
        }
    }

    pub fn int(&mut self) -> Result<BigUint> {
        let at = self.pos;
        let b = self.bytes()?;
        if b.first() == Some(&0) {
            return Err(Error::Malformed { offset: at, reason: "non-minimal integer".into() });
        }
        Ok(BigUint::from_bytes_be(b))
    }

    pub fn u64(&mut self) -> Result<u64> {
        let at = self.pos;
        let x = self.int()?;
        u64::try_from(&x).map_err(|_| Error::Malformed { offset: at, reason: "integer exceeds u64".into() })
    }

    pub fn get<T: Wire>(&mut self) -> Result<T> {
        T::read(self)
    }

    pub fn list<T: Wire>(&mut self) -> Result<Vec<T>> {
        let n = self.count()?;
        (0..n).map(|_| T::read(self)).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.pos == self.buf.len()
    }

    pub fn finish(&self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(self.err("trailing bytes"))
        }
    }
}

/// A type with a canonical wire encoding.
pub trait Wire: Sized {
    fn write(&self, w: &mut Writer);
    fn read(r: &mut Reader<'_>) -> Result<Self>;
}

pub fn to_bytes<T: Wire>(x: &T) -> Vec<u8> {
    let mut w = Writer::new();
    x.write(&mut w);
    w.finish()
}

/// Decodes a complete value; trailing bytes are an error.
pub fn from_bytes<T: Wire>(params: &GroupParams, bytes: &[u8]) -> Result<T> {
    let mut r = Reader::new(params, bytes);
    let x = T::read(&mut r)?;
    r.finish()?;
    Ok(x)
}

impl Wire for BigUint {
    fn write(&self, w: &mut Writer) {
        w.int(self);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.int()
    }
}

impl Wire for u64 {
    fn write(&self, w: &mut Writer) {
        w.u64(*self);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.u64()
    }
}

impl Wire for bool {
    fn write(&self, w: &mut Writer) {
        w.u8(*self as u8);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        r.bool()
    }
}

impl Wire for GroupElement {
    fn write(&self, w: &mut Writer) {
        w.int(self.value());
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        let x = r.int()?;
        r.params().element(x).map_err(|_| Error::Malformed { offset: at, reason: "not a group element".into() })
    }
}

impl Wire for BitCommitment {
    fn write(&self, w: &mut Writer) {
        self.0.write(w);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(BitCommitment(r.get()?))
    }
}

impl Wire for BitOpening {
    fn write(&self, w: &mut Writer) {
        w.u8(self.bit as u8).int(&self.r);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(BitOpening { bit: r.bool()?, r: r.int()? })
    }
}

impl Wire for IntCommitment {
    fn write(&self, w: &mut Writer) {
        w.u8(u8::try_from(self.width()).expect("width fits in a byte"));
        for c in &self.bits {
            c.write(w);
        }
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let width = r.u8()? as usize;
        let bits = (0..width).map(|_| r.get()).collect::<Result<_>>()?;
        Ok(IntCommitment { bits })
    }
}

fn write_shape(w: &mut Writer, shape: &[usize]) {
    w.count(shape.len());
    for &m in shape {
        w.count(m);
    }
}

fn read_shape(r: &mut Reader<'_>) -> Result<Vec<usize>> {
    let k = r.count()?;
    let shape: Vec<usize> = (0..k).map(|_| r.count()).collect::<Result<_>>()?;
    if shape.iter().sum::<usize>() > MAX_COUNT as usize {
        return Err(r.err("statement too large"));
    }
    Ok(shape)
}

fn read_matrix<T>(
    r: &mut Reader<'_>,
    shape: &[usize],
    mut f: impl FnMut(&mut Reader<'_>) -> Result<T>,
) -> Result<Vec<Vec<T>>> {
    shape.iter().map(|&m| (0..m).map(|_| f(r)).collect()).collect()
}

impl Wire for CdsStatement {
    fn write(&self, w: &mut Writer) {
        write_shape(w, &self.shape());
        for c in self.rows().iter().flatten() {
            w.put(&c.base).put(&c.target);
        }
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let at = r.offset();
        let shape = read_shape(r)?;
        let rows = read_matrix(r, &shape, |r| Ok(Cell::new(r.get()?, r.get()?)))?;
        CdsStatement::new(rows).map_err(|e| Error::Malformed { offset: at, reason: e.to_string() })
    }
}

impl Wire for SigmaFirst {
    fn write(&self, w: &mut Writer) {
        let shape: Vec<usize> = self.alphas.iter().map(Vec::len).collect();
        write_shape(w, &shape);
        for a in self.alphas.iter().flatten() {
            a.write(w);
        }
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let shape = read_shape(r)?;
        Ok(SigmaFirst { alphas: read_matrix(r, &shape, |r| r.get())? })
    }
}

impl Wire for SigmaResponse {
    fn write(&self, w: &mut Writer) {
        let shape: Vec<usize> = self.gammas.iter().map(Vec::len).collect();
        write_shape(w, &shape);
        for b in &self.betas {
            w.int(b);
        }
        for g in self.gammas.iter().flatten() {
            w.int(g);
        }
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let shape = read_shape(r)?;
        let betas = (0..shape.len()).map(|_| r.int()).collect::<Result<_>>()?;
        Ok(SigmaResponse { betas, gammas: read_matrix(r, &shape, |r| r.int())? })
    }
}

/// Shape header once, then alphas, challenge, betas and gammas row-major, then
/// the 32-byte context digest.
impl Wire for NiProof {
    fn write(&self, w: &mut Writer) {
        let shape: Vec<usize> = self.first.alphas.iter().map(Vec::len).collect();
        write_shape(w, &shape);
        for a in self.first.alphas.iter().flatten() {
            a.write(w);
        }
        w.int(&self.challenge);
        for b in &self.response.betas {
            w.int(b);
        }
        for g in self.response.gammas.iter().flatten() {
            w.int(g);
        }
        w.raw(&self.context_digest);
    }
    fn read(r: &mut Reader<'_>) -> Result<Self> {
        let shape = read_shape(r)?;
        let alphas = read_matrix(r, &shape, |r| r.get())?;
        let challenge = r.int()?;
        let betas = (0..shape.len()).map(|_| r.int()).collect::<Result<_>>()?;
        let gammas = read_matrix(r, &shape, |r| r.int())?;
        let mut context_digest = [0u8; 32];
        context_digest.copy_from_slice(r.raw(32)?);
        Ok(NiProof {
            first: SigmaFirst { alphas },
            challenge,
            response: SigmaResponse { betas, gammas },
            context_digest,
        })
    }
}

/// Tag of the setup frame that opens every transcript.
pub const TAG_SETUP: u8 = 0x00;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Frame {
    pub tag: u8,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: u8, payload: Vec<u8>) -> Self {
        Frame { tag, payload }
    }

    /// Tag byte, 4-byte big-endian length, payload.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.payload.len());
        out.push(self.tag);
        out.extend_from_slice(&(self.payload.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    /// Decodes one frame from the front of `bytes`, returning it and the number
    /// of bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Frame, usize)> {
        if bytes.len() < 5 {
            return Err(Error::Malformed { offset: bytes.len(), reason: "truncated frame header".into() });
        }
        let len = u32::from_be_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]) as usize;
        if bytes.len() - 5 < len {
            return Err(Error::Malformed {
                offset: bytes.len(),
                reason: format!("frame declares {len} payload bytes, {} present", bytes.len() - 5),
            });
        }
        Ok((Frame::new(bytes[0], bytes[5..5 + len].to_vec()), 5 + len))
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame> {
        let (f, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(Error::Malformed { offset: used, reason: "trailing bytes after frame".into() });
        }
        Ok(f)
    }

    pub fn read_from<R: std::io::Read>(r: &mut R) -> Result<Frame> {
        let mut head = [0u8; 5];
        r.read_exact(&mut head)?;
        let len = u32::from_be_bytes([head[1], head[2], head[3], head[4]]);
        if len > 64 * MAX_COUNT {
            return Err(Error::Malformed { offset: 1, reason: "frame too large".into() });
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload)?;
        Ok(Frame::new(head[0], payload))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.encode())?;
        w.flush()?;
        Ok(())
    }
}

/// The setup frame binds the group modulus and the reference-string seed.
pub fn setup_frame(rf: &RefString) -> Frame {
    let mut w = Writer::new();
    w.int(rf.params().q()).bytes(rf.seed());
    Frame::new(TAG_SETUP, w.finish())
}

/// Rebuilds the reference string from a setup frame. `known` short-circuits
/// primality validation when the modulus matches already-validated parameters.
pub fn read_setup(frame: &Frame, known: Option<&GroupParams>) -> Result<RefString> {
    if frame.tag != TAG_SETUP {
        return Err(Error::Malformed { offset: 0, reason: "first frame is not a setup frame".into() });
    }
    let dummy = GroupParams::toy7();
    let mut r = Reader::new(&dummy, &frame.payload);
    let q = r.int()?;
    let seed = r.bytes()?.to_vec();
    r.finish()?;
    let params = match known {
        Some(p) if p.q() == &q => p.clone(),
        _ => GroupParams::from_safe_prime(q)?,
    };
    derive_generators(&params, &seed)
}

/// Fiat-Shamir context: setup frame, every earlier frame in order, then a
/// label and the statement encoding.
pub fn fs_context(rf: &RefString, history: &[Frame], label: &[u8], stmt: &CdsStatement) -> Vec<u8> {
    let mut out = setup_frame(rf).encode();
    for f in history {
        out.extend_from_slice(&f.encode());
    }
    let mut w = Writer::new();
    w.bytes(label).put(stmt);
    out.extend_from_slice(&w.finish());
    out
}

pub const TRANSCRIPT_MAGIC: &str = "zkmech/1";

/// A complete message log. `frames[0]` is the setup frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    pub kind: String,
    pub h: u64,
    pub frames: Vec<Frame>,
}

pub fn transcript_to_string(t: &Transcript) -> String {
    let mut s = format!("{TRANSCRIPT_MAGIC} {} H={}\n", t.kind, t.h);
    for f in &t.frames {
        let _ = writeln!(s, "{}", hex::encode(f.encode()));
    }
    s
}

pub fn transcript_write<W: Write>(w: &mut W, t: &Transcript) -> Result<()> {
    w.write_all(transcript_to_string(t).as_bytes())?;
    Ok(())
}

pub fn transcript_read<R: BufRead>(r: R) -> Result<Transcript> {
    let mut lines = r.lines();
    let header = lines.next().ok_or(Error::Parse { line: 1, reason: "empty transcript".into() })??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse { line: 1, reason: format!("bad header {header:?}") };
    if parts.len() != 3 || parts[0] != TRANSCRIPT_MAGIC {
        return Err(bad_header());
    }
    let h = parts[2].strip_prefix("H=").and_then(|x| x.parse::<u64>().ok()).ok_or_else(bad_header)?;
    let mut frames = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bytes = hex::decode(line).map_err(|e| Error::Parse { line: line_no, reason: e.to_string() })?;
        let frame = Frame::decode(&bytes).map_err(|e| Error::Parse { line: line_no, reason: e.to_string() })?;
        frames.push(frame);
    }
    Ok(Transcript { kind: parts[1].to_string(), h, frames })
}

pub fn transcript_from_str(s: &str) -> Result<Transcript> {
    transcript_read(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commit::tests::toy23_ref;
    use crate::group::seeded_rng;
    use crate::sigma::{ni_prove, ni_verify, CdsWitness};
    use rand::Rng;

    #[test]
    fn minimal_integers() {
        let mut w = Writer::new();
        w.int(&BigUint::from(5u8));
        assert_eq!(w.finish(), vec![0, 0, 0, 1, 5]);
        let mut w = Writer::new();
        w.int(&BigUint::zero());
        assert_eq!(w.finish(), vec![0, 0, 0, 0]);
        let p = GroupParams::toy23();
        assert!(matches!(from_bytes::<BigUint>(&p, &[0, 0, 0, 2, 0, 5]), Err(Error::Malformed { offset: 0, .. })));
        assert!(matches!(from_bytes::<BigUint>(&p, &[0, 0, 0, 2, 5]), Err(Error::Malformed { .. })));
    }

    #[test]
    fn element_decode_checks_membership() {
        let p = GroupParams::toy7();
        assert!(from_bytes::<GroupElement>(&p, &[0, 0, 0, 1, 2]).is_ok());
        assert!(from_bytes::<GroupElement>(&p, &[0, 0, 0, 1, 3]).is_err());
        assert!(from_bytes::<GroupElement>(&p, &[0, 0, 0, 0]).is_err());
    }

    #[test]
    fn truncated_frame_reports_offset() {
        let f = Frame::new(1, vec![1, 2, 3]);
        let enc = f.encode();
        assert_eq!(Frame::decode(&enc).unwrap(), f);
        assert!(matches!(Frame::decode(&enc[..6]), Err(Error::Malformed { offset: 6, .. })));
        assert!(matches!(Frame::decode(&enc[..3]), Err(Error::Malformed { offset: 3, .. })));
    }

    fn random_proof(rng: &mut impl Rng) -> (CdsStatement, NiProof, Vec<u8>) {
        let rf = toy23_ref();
        let params = rf.params();
        let k = rng.gen_range(1..4);
        let row = rng.gen_range(0..k);
        let mut rows = Vec::new();
        let mut exps = Vec::new();
        for i in 0..k {
            let m = rng.gen_range(1..4);
            let mut cells = Vec::new();
            for _ in 0..m {
                let base = params.elem_sample(rng);
                let e = params.exp_sample(rng);
                let target = params.pow(&base, &e);
                if i == row {
                    exps.push(e);
                }
                cells.push(Cell::new(base, target));
            }
            rows.push(cells);
        }
        let stmt = CdsStatement::new(rows).unwrap();
        let ctx: Vec<u8> = (0..8).map(|_| rng.gen()).collect();
        let proof = ni_prove(params, &stmt, &CdsWitness { row, exps }, &ctx, rng).unwrap();
        (stmt, proof, ctx)
    }

    #[test]
    fn ni_proof_round_trip() {
        let params = GroupParams::toy23();
        let mut rng = seeded_rng(b"t", b"codec-rt");
        for _ in 0..1000 {
            let (stmt, proof, _) = random_proof(&mut rng);
            let bytes = to_bytes(&proof);
            assert_eq!(from_bytes::<NiProof>(&params, &bytes).unwrap(), proof);
            assert_eq!(from_bytes::<CdsStatement>(&params, &to_bytes(&stmt)).unwrap(), stmt);
        }
    }

    #[test]
    fn ni_proof_bit_flips_fail() {
        let params = GroupParams::toy23();
        let mut rng = seeded_rng(b"t", b"codec-flip");
        let (stmt, proof, ctx) = random_proof(&mut rng);
        let bytes = to_bytes(&proof);
        for _ in 0..200 {
            let mut m = bytes.clone();
            let pos = rng.gen_range(0..m.len() * 8);
            m[pos / 8] ^= 1 << (pos % 8);
            let ok = from_bytes::<NiProof>(&params, &m).is_ok_and(|p| ni_verify(&params, &stmt, &p, &ctx));
            assert!(!ok, "mutation at bit {pos} accepted");
        }
    }

    #[test]
    fn fs_context_properties() {
        let rf = toy23_ref();
        let params = rf.params();
        let g = rf.g().clone();
        let stmt = CdsStatement::schnorr(g.clone(), params.pow(&g, &BigUint::from(3u8))).unwrap();
        let empty = fs_context(&rf, &[], b"", &stmt);
        let mut expect = setup_frame(&rf).encode();
        expect.extend_from_slice(&[0, 0, 0, 0]);
        expect.extend_from_slice(&to_bytes(&stmt));
        assert_eq!(empty, expect);
        let a = Frame::new(1, vec![1]);
        let b = Frame::new(2, vec![2]);
        let ab = fs_context(&rf, &[a.clone(), b.clone()], b"x", &stmt);
        let ba = fs_context(&rf, &[b, a.clone()], b"x", &stmt);
        assert_ne!(ab, ba);
        assert_eq!(ab, fs_context(&rf, &[a, Frame::new(2, vec![2])], b"x", &stmt));
    }

    #[test]
    fn transcript_text_round_trip_and_errors() {
        let rf = toy23_ref();
        let t = Transcript { kind: "ex1".into(), h: 8, frames: vec![setup_frame(&rf), Frame::new(1, vec![9, 9])] };
        let s = transcript_to_string(&t);
        assert!(s.starts_with("zkmech/1 ex1 H=8\n"));
        assert_eq!(transcript_from_str(&s).unwrap(), t);
        let bad = s.replacen("01000000020909", "0100000002zz09", 1);
        assert!(matches!(transcript_from_str(&bad), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(transcript_from_str("nope\n"), Err(Error::Parse { line: 1, .. })));
        let back = read_setup(&t.frames[0], None).unwrap();
        assert_eq!(back.params().q(), rf.params().q());
        assert_eq!(back.seed(), rf.seed());
    }

    proptest::proptest! {
        #[test]
        fn int_encoding_is_canonical(a in proptest::collection::vec(0u8.., 0..40), b in proptest::collection::vec(0u8.., 0..40)) {
            let x = BigUint::from_bytes_be(&a);
            let y = BigUint::from_bytes_be(&b);
            let p = GroupParams::toy7();
            let ex = to_bytes(&x);
            proptest::prop_assert_eq!(from_bytes::<BigUint>(&p, &ex).unwrap(), x.clone());
            proptest::prop_assert_eq!(ex == to_bytes(&y), x == y);
        }

        #[test]
        fn opening_and_commitment_round_trip(bits in proptest::collection::vec(proptest::bool::ANY, 0..8), seed in 0u64..1000) {
            let rf = toy23_ref();
            let mut rng = seeded_rng(b"pt", &seed.to_be_bytes());
            let (com, ops) = crate::commit::commit_bits(&rf, &bits, &mut rng);
            proptest::prop_assert_eq!(from_bytes::<IntCommitment>(rf.params(), &to_bytes(&com)).unwrap(), com);
            for op in ops {
                proptest::prop_assert_eq!(from_bytes::<BitOpening>(rf.params(), &to_bytes(&op)).unwrap(), op);
            }
        }
    }
}
