//! Binary agent checkpoints. Floats are stored as raw IEEE bits so a
//! save/load cycle is exact; the learner config travels as JSON.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use super::agent::{Agent, LearnerConfig};
use super::net::{Adam, Mlp};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HUAVCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u128(&mut self, v: u128) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.u64(v.to_bits())
    }
    fn f64s(&mut self, v: &[f64]) -> Result<()> {
        self.u64(v.len() as u64)?;
        v.iter().try_for_each(|&x| self.f64(x))
    }
    fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.u64(b.len() as u64)?;
        Ok(self.0.write_all(b)?)
    }
    fn mlp(&mut self, m: &Mlp) -> Result<()> {
        self.u64(m.sizes().len() as u64)?;
        m.sizes().iter().try_for_each(|&s| self.u64(s as u64))?;
        self.f64s(&m.params)
    }
    fn adam(&mut self, a: &Adam) -> Result<()> {
        self.f64(a.lr)?;
        self.f64(a.beta1)?;
        self.f64(a.beta2)?;
        self.f64(a.eps)?;
        self.u64(a.t)?;
        self.f64s(&a.m)?;
        self.f64s(&a.v)
    }
}

struct Reader<R: Read>(R);

fn corrupt(what: &str) -> Error {
    Error::Checkpoint(format!("corrupt checkpoint: {what}"))
}

impl<R: Read> Reader<R> {
    fn exact<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|_| corrupt("truncated"))?;
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.exact()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.exact()?))
    }
    fn u128(&mut self) -> Result<u128> {
        Ok(u128::from_le_bytes(self.exact()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > 1 << 32 {
            return Err(corrupt("implausible length"));
        }
        Ok(n as usize)
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.len()?;
        (0..n).map(|_| self.f64()).collect()
    }
    fn bytes(&mut self) -> Result<Vec<u8>> {
        let n = self.len()?;
        let mut b = vec![0u8; n];
        self.0.read_exact(&mut b).map_err(|_| corrupt("truncated"))?;
        Ok(b)
    }
    fn mlp(&mut self) -> Result<Mlp> {
        let n = self.len()?;
        let sizes = (0..n).map(|_| self.u64().map(|s| s as usize)).collect::<Result<Vec<_>>>()?;
        let params = self.f64s()?;
        Mlp::from_parts(sizes, params).ok_or_else(|| corrupt("network shape"))
    }
    fn adam(&mut self) -> Result<Adam> {
        Ok(Adam {
            lr: self.f64()?,
            beta1: self.f64()?,
            beta2: self.f64()?,
            eps: self.f64()?,
            t: self.u64()?,
            m: self.f64s()?,
            v: self.f64s()?,
        })
    }
}

pub fn write_agents<W: Write>(out: W, agents: &[Agent]) -> Result<()> {
    let mut w = Writer(out);
    w.0.write_all(MAGIC)?;
    w.u32(CHECKPOINT_VERSION)?;
    w.u64(agents.len() as u64)?;
    for a in agents {
        w.u64(a.id as u64)?;
        w.bytes(serde_json::to_string(&a.cfg)?.as_bytes())?;
        for net in [&a.policy, &a.q1, &a.q2, &a.q1_target, &a.q2_target] {
            w.mlp(net)?;
        }
        w.f64(a.log_alpha)?;
        for opt in [&a.opt_policy, &a.opt_q1, &a.opt_q2, &a.opt_alpha] {
            w.adam(opt)?;
        }
        w.0.write_all(&a.rng.get_seed())?;
        w.u64(a.rng.get_stream())?;
        w.u128(a.rng.get_word_pos())?;
        w.u64(a.updates)?;
    }
    Ok(())
}

pub fn read_agents<R: Read>(input: R) -> Result<Vec<Agent>> {
    let mut r = Reader(input);
    if &r.exact::<8>()? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let n = r.len()?;
    let mut agents = Vec::with_capacity(n);
    for _ in 0..n {
        let id = r.u64()? as usize;
        let cfg: LearnerConfig = serde_json::from_slice(&r.bytes()?)?;
        let policy = r.mlp()?;
        let q1 = r.mlp()?;
        let q2 = r.mlp()?;
        let q1_target = r.mlp()?;
        let q2_target = r.mlp()?;
        let log_alpha = r.f64()?;
        let opt_policy = r.adam()?;
        let opt_q1 = r.adam()?;
        let opt_q2 = r.adam()?;
        let opt_alpha = r.adam()?;
        let mut rng = ChaCha8Rng::from_seed(r.exact::<32>()?);
        rng.set_stream(r.u64()?);
        rng.set_word_pos(r.u128()?);
        let updates = r.u64()?;
        let shapes_ok = [&q1, &q2, &q1_target, &q2_target].iter().all(|m| m.sizes() == policy.sizes())
            && [&opt_policy, &opt_q1, &opt_q2].iter().all(|o| o.m.len() == policy.n_params() && o.v.len() == policy.n_params())
            && opt_alpha.m.len() == 1;
        if !shapes_ok {
            return Err(corrupt("inconsistent shapes"));
        }
        agents.push(Agent {
            id,
            cfg,
            policy,
            q1,
            q2,
            q1_target,
            q2_target,
            log_alpha,
            opt_policy,
            opt_q1,
            opt_q2,
            opt_alpha,
            rng,
            updates,
        });
    }
    Ok(agents)
}

pub fn save_agents(path: &Path, agents: &[Agent]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_agents(&mut f, agents)?;
    f.flush()?;
    Ok(())
}

pub fn load_agents(path: &Path) -> Result<Vec<Agent>> {
    read_agents(std::io::BufReader::new(std::fs::File::open(path)?))
}
