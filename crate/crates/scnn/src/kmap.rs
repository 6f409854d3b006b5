use crate::error::{Error, Result};
use crate::tensor::{coord_index, Coord};

/// Number of offsets in a 3×3×3 kernel.
pub const KERNEL_VOLUME: usize = 27;
/// Index of the zero offset.
pub const CENTER: usize = 13;

/// Offset `(dx, dy, dz)` with components in `-1..=1` for a kernel index.
pub fn offset(index: usize) -> [i32; 3] {
    let i = index as i32;
    [i / 9 - 1, (i / 3) % 3 - 1, i % 3 - 1]
}

/// Kernel index of an offset.
pub fn offset_index(d: [i32; 3]) -> usize {
    ((d[0] + 1) * 9 + (d[1] + 1) * 3 + (d[2] + 1)) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvKind {
    SameSite,
    Strided,
    Transposed,
}

/// Input/output row pairs for every kernel offset.
///
/// A pair `(p, r)` under offset `δ` means input site `p` lies at output site
/// `r` plus `δ` times the finer of the two strides.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMap {
    pub kind: ConvKind,
    pub in_stride: i32,
    pub out_stride: i32,
    pub n_in: usize,
    pub n_out: usize,
    pub pairs: Vec<Vec<(u32, u32)>>,
    /// The centre list is exactly `(r, r)` for every row.
    pub center_identity: bool,
}

impl KernelMap {
    pub fn pair_count(&self) -> usize {
        self.pairs.iter().map(Vec::len).sum()
    }

    /// The adjoint map: inputs and outputs swapped, offsets mirrored. A
    /// strided map transposes into the matching upsampling map.
    pub fn transpose(&self) -> KernelMap {
        let mut pairs = vec![Vec::new(); KERNEL_VOLUME];
        for (d, list) in self.pairs.iter().enumerate() {
            let mut swapped: Vec<(u32, u32)> = list.iter().map(|&(p, r)| (r, p)).collect();
            swapped.sort_unstable_by_key(|&(p, r)| (r, p));
            pairs[KERNEL_VOLUME - 1 - d] = swapped;
        }
        let kind = match self.kind {
            ConvKind::SameSite => ConvKind::SameSite,
            ConvKind::Strided => ConvKind::Transposed,
            ConvKind::Transposed => ConvKind::Strided,
        };
        let center_identity = self.n_in == self.n_out
            && pairs[CENTER].len() == self.n_in
            && pairs[CENTER].iter().enumerate().all(|(i, &(p, r))| p as usize == i && r as usize == i);
        KernelMap {
            kind,
            in_stride: self.out_stride,
            out_stride: self.in_stride,
            n_in: self.n_out,
            n_out: self.n_in,
            pairs,
            center_identity,
        }
    }
}

/// Enumerates kernel pairs by coordinate lookup. Output coordinates are
/// supplied by the caller: the input coordinates for same-site convolutions,
/// [`crate::tensor::downsample_coords`] for strided ones and the cached finer
/// level for transposed ones.
pub fn build_kernel_map(
    input: &[Coord],
    in_stride: i32,
    output: &[Coord],
    out_stride: i32,
    kind: ConvKind,
) -> Result<KernelMap> {
    let fine = match kind {
        ConvKind::SameSite if out_stride == in_stride => in_stride,
        ConvKind::Strided if out_stride == 2 * in_stride => in_stride,
        ConvKind::Transposed if 2 * out_stride == in_stride => out_stride,
        _ => {
            return Err(Error::Stride(format!(
                "{kind:?} convolution from stride {in_stride} to {out_stride}"
            )))
        }
    };
    let index = coord_index(input);
    let mut pairs = vec![Vec::new(); KERNEL_VOLUME];
    for (r, c) in output.iter().enumerate() {
        for (d, list) in pairs.iter_mut().enumerate() {
            let o = offset(d);
            let q = [c[0], c[1] + o[0] * fine, c[2] + o[1] * fine, c[3] + o[2] * fine];
            if let Some(&p) = index.get(&q) {
                list.push((p, r as u32));
            }
        }
    }
    let center_identity = input.len() == output.len()
        && pairs[CENTER].len() == input.len()
        && pairs[CENTER].iter().all(|&(p, r)| p == r);
    Ok(KernelMap {
        kind,
        in_stride,
        out_stride,
        n_in: input.len(),
        n_out: output.len(),
        pairs,
        center_identity,
    })
}
