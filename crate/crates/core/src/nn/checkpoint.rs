//! Flat binary checkpoint format.
//!
//! ```text
//! magic        8 bytes  "GTINTNN1"
//! input_dim    u32 LE
//! head         u8       0 = softmax cross-entropy, 1 = logistic
//! layer_count  u32 LE
//! per layer:
//!   tag        u8       0 dense, 1 relu, 2 dropout, 3 batchnorm, 4 square
//!   dense:     u32 in, u32 out, f64[in*out] weight (row-major in x out), f64[out] bias
//!   dropout:   f64 rate
//!   batchnorm: u32 dim, f64 momentum, f64 eps,
//!              f64[dim] gamma, beta, running_mean, running_var
//! ```
//!
//! All floats are little-endian IEEE-754 doubles.

use std::io::{Read, Write};

use super::layers::{BatchNorm, Dense, Dropout, Layer};
use super::network::{Head, Network};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"GTINTNN1";

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format("dimension exceeds u32".into()))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s(w: &mut impl Write, vs: &[f64]) -> Result<()> {
    for v in vs {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_u8(r: &mut impl Read) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write(net: &Network, w: &mut impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(w, net.input_dim())?;
    w.write_all(&[match net.head() {
        Head::SoftmaxCrossEntropy => 0,
        Head::Logistic => 1,
    }])?;
    put_u32(w, net.layers().len())?;
    for layer in net.layers() {
        match layer {
            Layer::Dense(d) => {
                w.write_all(&[0])?;
                put_u32(w, d.in_dim)?;
                put_u32(w, d.out_dim)?;
                put_f64s(w, &d.weight)?;
                put_f64s(w, &d.bias)?;
            }
            Layer::Relu => w.write_all(&[1])?,
            Layer::Square => w.write_all(&[4])?,
            Layer::Dropout(d) => {
                w.write_all(&[2])?;
                put_f64s(w, &[d.rate])?;
            }
            Layer::BatchNorm(b) => {
                w.write_all(&[3])?;
                put_u32(w, b.dim)?;
                put_f64s(w, &[b.momentum, b.eps])?;
                put_f64s(w, &b.gamma)?;
                put_f64s(w, &b.beta)?;
                put_f64s(w, &b.running_mean)?;
                put_f64s(w, &b.running_var)?;
            }
        }
    }
    Ok(())
}

pub fn read(r: &mut impl Read) -> Result<Network> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a network checkpoint".into()));
    }
    let input_dim = get_u32(r)?;
    let head = match get_u8(r)? {
        0 => Head::SoftmaxCrossEntropy,
        1 => Head::Logistic,
        t => return Err(Error::Format(format!("unknown head tag {t}"))),
    };
    let count = get_u32(r)?;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        layers.push(match get_u8(r)? {
            0 => {
                let (i, o) = (get_u32(r)?, get_u32(r)?);
                let weight = get_f64s(r, i * o)?;
                let bias = get_f64s(r, o)?;
                Layer::Dense(Dense::from_parts(i, o, weight, bias))
            }
            1 => Layer::Relu,
            2 => {
                let rate = get_f64s(r, 1)?[0];
                if !(0.0..1.0).contains(&rate) {
                    return Err(Error::Format(format!("dropout rate {rate} out of range")));
                }
                Layer::Dropout(Dropout::new(rate))
            }
            3 => {
                let dim = get_u32(r)?;
                let me = get_f64s(r, 2)?;
                let mut bn = BatchNorm::new(dim);
                bn.momentum = me[0];
                bn.eps = me[1];
                bn.gamma = get_f64s(r, dim)?;
                bn.beta = get_f64s(r, dim)?;
                bn.running_mean = get_f64s(r, dim)?;
                bn.running_var = get_f64s(r, dim)?;
                Layer::BatchNorm(bn)
            }
            4 => Layer::Square,
            t => return Err(Error::Format(format!("unknown layer tag {t}"))),
        });
    }
    Network::new(input_dim, layers, head)
}

pub fn save(net: &Network, path: &std::path::Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(net, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<Network> {
    read(&mut std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::MlpConfig;

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let cfg = MlpConfig {
            input_dim: 6,
            hidden: vec![5, 4],
            outputs: 3,
            site_hidden: 0,
            dropout_rate: 0.5,
            batchnorm: true,
            head: Head::SoftmaxCrossEntropy,
        };
        let net = Network::mlp(&cfg, 9).unwrap();
        let mut buf = Vec::new();
        write(&net, &mut buf).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        let back = read(&mut buf.as_slice()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn truncated_checkpoint_fails() {
        let net = Network::mlp(
            &MlpConfig {
                input_dim: 3,
                hidden: vec![2],
                outputs: 2,
                site_hidden: 0,
                dropout_rate: 0.0,
                batchnorm: false,
                head: Head::SoftmaxCrossEntropy,
            },
            1,
        )
        .unwrap();
        let mut buf = Vec::new();
        write(&net, &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read(&mut buf.as_slice()).is_err());
    }
}
