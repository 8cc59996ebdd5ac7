//! Running one role of a session over a byte stream of frames.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{TcpListener, TcpStream};

use zkmech::codec::{Frame, Transcript};
use zkmech::error::{Error, Result};
use zkmech::group::RefString;
use zkmech::protocols::{Buyer, ExampleKind, MechanismSpec, Message, Outcome, Role, Seller};

use crate::{prompt_values, Failure, Run, Seeds};

pub enum Transport {
    Stdio,
    Tcp(String),
}

/// `:7000` means every interface.
fn listen_addr(addr: &str) -> String {
    match addr.strip_prefix(':') {
        Some(port) => format!("0.0.0.0:{port}"),
        None => addr.to_string(),
    }
}

fn send<W: Write>(w: &mut W, msg: &Message) -> Result<()> {
    msg.to_frame().write_to(w)?;
    w.flush()?;
    Ok(())
}

fn recv<R: Read>(r: &mut R, rf: &RefString) -> Result<Message> {
    Message::from_frame(rf.params(), &Frame::read_from(r)?)
}

fn run_seller<R: Read, W: Write>(seller: &mut Seller, rf: &RefString, r: &mut R, w: &mut W) -> Result<()> {
    while !seller.is_done() {
        match seller.poll() {
            Some(msg) => send(w, &msg)?,
            None => {
                let msg = recv(r, rf)?;
                seller.receive(&msg)?;
            }
        }
    }
    Ok(())
}

fn run_buyer<R: Read, W: Write>(
    buyer: &mut Buyer,
    rf: &RefString,
    r: &mut R,
    w: &mut W,
) -> Result<(Outcome, Transcript)> {
    while let Some(role) = buyer.verifier().next_speaker() {
        match role {
            Role::Seller => {
                let msg = recv(r, rf)?;
                buyer.receive(&msg)?;
            }
            Role::Buyer => {
                let msg = buyer.poll()?.expect("buyer's turn yields a message");
                send(w, &msg)?;
            }
        }
    }
    let outcome = buyer.outcome().cloned().expect("finished session has an outcome");
    Ok((outcome, buyer.verifier().transcript()))
}

/// Serves sessions one after another until `limit` is reached.
pub fn serve(rf: &RefString, spec: &MechanismSpec, transport: &Transport, seeds: &Seeds, limit: Option<u64>) -> Run {
    match transport {
        Transport::Stdio => {
            let mut seller = Seller::new(rf.clone(), spec.clone(), seeds.rng(b"seller", 0))?;
            run_seller(&mut seller, rf, &mut io::stdin().lock(), &mut io::stdout().lock())?;
            eprintln!("session finished");
            Ok(())
        }
        Transport::Tcp(addr) => {
            let listener = TcpListener::bind(listen_addr(addr))?;
            eprintln!("listening on {}", listener.local_addr()?);
            let mut served = 0;
            while limit.is_none_or(|n| served < n) {
                let (stream, peer) = listener.accept()?;
                let mut seller = Seller::new(rf.clone(), spec.clone(), seeds.rng(b"seller", served))?;
                let mut r = BufReader::new(stream.try_clone()?);
                let mut w = BufWriter::new(stream);
                match run_seller(&mut seller, rf, &mut r, &mut w) {
                    Ok(()) => eprintln!("session {served} with {peer} finished"),
                    Err(e) => eprintln!("session {served} with {peer} aborted: {e}"),
                }
                served += 1;
            }
            Ok(())
        }
    }
}

/// Runs the buyer; `values: None` asks on the terminal once the commitment
/// has been checked.
pub fn buy(
    rf: &RefString,
    kind: ExampleKind,
    h: u64,
    values: Option<Vec<u64>>,
    transport: &Transport,
    seeds: &Seeds,
) -> Run<(Outcome, Transcript)> {
    let rng = seeds.rng(b"buyer", 0);
    let mut buyer = match values {
        Some(v) => Buyer::new(rf.clone(), kind, h, v, rng)?,
        None => Buyer::with_value_source(rf.clone(), kind, h, Box::new(move || prompt_values(kind, h)), rng)?,
    };
    let result = match transport {
        Transport::Stdio => run_buyer(&mut buyer, rf, &mut io::stdin().lock(), &mut io::stdout().lock()),
        Transport::Tcp(addr) => {
            let stream = TcpStream::connect(addr).map_err(|e| Failure::Rejected(format!("connect {addr}: {e}")))?;
            let mut r = BufReader::new(stream.try_clone()?);
            let mut w = BufWriter::new(stream);
            run_buyer(&mut buyer, rf, &mut r, &mut w)
        }
    };
    result.map_err(|e| match e {
        Error::InvalidInput(_) | Error::ValueOutOfRange { .. } => Failure::Usage(e.to_string()),
        other => Failure::Rejected(other.to_string()),
    })
}
