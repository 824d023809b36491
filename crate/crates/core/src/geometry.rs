//! Windows, point distances and doubly-exponential boxing systems.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Upper bound on the number of grid cells enumerated per boxing system.
pub const MAX_BOX_CELLS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Hard,
    Torus,
}

/// The cube `[-side/2, side/2]^d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub d: usize,
    pub side: f64,
    pub boundary: Boundary,
}

impl Window {
    pub fn new(d: usize, side: f64, boundary: Boundary) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("dimension must be positive"));
        }
        if !(side > 0.0) || !side.is_finite() {
            return Err(Error::param(format!("window side must be positive, got {side}")));
        }
        Ok(Self { d, side, boundary })
    }

    pub fn unit(d: usize) -> Self {
        Self {
            d,
            side: 1.0,
            boundary: Boundary::Hard,
        }
    }

    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.d as i32)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let h = self.half();
        x.len() == self.d && x.iter().all(|&c| (-h..=h).contains(&c))
    }

    /// Difference along one axis, wrapped to the minimal image on a torus.
    #[inline]
    pub fn axis_gap(&self, a: f64, b: f64) -> f64 {
        let g = (a - b).abs();
        match self.boundary {
            Boundary::Hard => g,
            Boundary::Torus => g.min(self.side - g),
        }
    }

    #[inline]
    pub fn dist_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (&a, &b) in x.iter().zip(y) {
            let g = self.axis_gap(a, b);
            acc += g * g;
        }
        acc
    }
}

/// Euclidean distance, with coordinate-wise minimal images on a torus.
pub fn pair_distance(x: &[f64], y: &[f64], w: &Window) -> f64 {
    w.dist_sq(x, y).sqrt()
}

/// One annulus `Gamma_k = Box_k \ Box_{k-1}` packed with a grid of sub-boxes.
#[derive(Debug, Clone)]
pub struct Annulus {
    pub k: usize,
    /// Half-side of `Box_k`.
    pub outer_half: f64,
    /// Half-side of `Box_{k-1}`; `None` for the innermost box.
    pub inner_half: Option<f64>,
    pub sub_side: f64,
    /// Lowest corner of `Box_k`; the grid is anchored here.
    pub anchor: Vec<f64>,
    /// Grid cells per axis inside `Box_k`.
    pub per_axis: u64,
    /// Mixed-radix encoded multi-indices of the retained sub-boxes.
    pub cells: Vec<u64>,
    index: HashMap<u64, usize>,
    /// Filled in by the leader scan.
    pub leaders: Vec<Option<usize>>,
    pub good: Vec<bool>,
    pub f1: Option<bool>,
}

impl Annulus {
    pub fn b_k(&self) -> usize {
        self.cells.len()
    }

    fn decode(&self, code: u64, d: usize) -> Vec<u64> {
        let mut c = code;
        (0..d)
            .map(|_| {
                let j = c % self.per_axis;
                c /= self.per_axis;
                j
            })
            .collect()
    }

    #[inline]
    fn lo(&self, axis: usize, j: u64) -> f64 {
        self.anchor[axis] + j as f64 * self.sub_side
    }

    /// Half-open extent `[lo, hi)` of sub-box `i`.
    pub fn extent(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        let d = self.anchor.len();
        let idx = self.decode(self.cells[i], d);
        let lo: Vec<f64> = (0..d).map(|a| self.lo(a, idx[a])).collect();
        let hi: Vec<f64> = (0..d).map(|a| self.lo(a, idx[a] + 1)).collect();
        (lo, hi)
    }

    /// Index of the retained sub-box containing `x`, if any.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let mut code = 0u64;
        let mut radix = 1u64;
        for (a, &xa) in x.iter().enumerate() {
            let t = ((xa - self.anchor[a]) / self.sub_side).floor();
            if !(t >= 0.0) || t >= self.per_axis as f64 {
                return None;
            }
            let mut j = t as u64;
            // Correct floor rounding against the stored extents.
            if xa < self.lo(a, j) {
                if j == 0 {
                    return None;
                }
                j -= 1;
            } else if xa >= self.lo(a, j + 1) {
                j += 1;
                if j >= self.per_axis {
                    return None;
                }
            }
            code += j * radix;
            radix = radix.saturating_mul(self.per_axis);
        }
        self.index.get(&code).copied()
    }
}

/// Nested boxes `Box_k` of volume `e^{M D C^k}` around `center`, each annulus
/// tiled by sub-boxes of volume `e^{M C^k}`.
#[derive(Debug, Clone)]
pub struct BoxingSystem {
    pub center: Vec<f64>,
    pub m: f64,
    pub c: f64,
    pub d_factor: f64,
    pub delta: f64,
    pub k_star: usize,
    pub window: Window,
    pub annuli: Vec<Annulus>,
}

impl BoxingSystem {
    /// `e^{M D C^k / d} / 2`.
    pub fn box_half(&self, k: usize) -> f64 {
        box_half(self.m, self.c, self.d_factor, self.window.d, k)
    }

    /// `e^{M C^k / d}`.
    pub fn sub_side(&self, k: usize) -> f64 {
        (self.m * self.c.powi(k as i32) / self.window.d as f64).exp()
    }

    /// `e^{M (D-1) C^k}`, the volume ratio of `Box_k` to one sub-box.
    pub fn volume_ratio(&self, k: usize) -> f64 {
        (self.m * (self.d_factor - 1.0) * self.c.powi(k as i32)).exp()
    }

    /// Whether `Gamma_k` lies entirely inside the window.
    pub fn annulus_in_window(&self, k: usize) -> bool {
        let h = self.box_half(k);
        let w = self.window.half();
        self.center.iter().all(|&c| c - h >= -w && c + h <= w)
    }
}

fn box_half(m: f64, c: f64, d_factor: f64, d: usize, k: usize) -> f64 {
    0.5 * (m * d_factor * c.powi(k as i32) / d as f64).exp()
}

/// Build the boxing system centred at `center`.
pub fn build_boxing(center: &[f64], m: f64, c: f64, d_factor: f64, delta: f64, w: &Window) -> Result<BoxingSystem> {
    if !(c > 1.0) || !(d_factor > 1.0) || !(m > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!(
            "boxing needs M > 0, C > 1, D > 1, 0 < delta < 1; got M={m} C={c} D={d_factor} delta={delta}"
        )));
    }
    if center.len() != w.d {
        return Err(Error::param("center dimension does not match window"));
    }
    let d = w.d;
    let box_side0 = 2.0 * box_half(m, c, d_factor, d, 0);
    if box_side0 > w.side {
        return Err(Error::NoAnnulus {
            side: w.side,
            box_side: box_side0,
        });
    }
    let mut k_star = 0;
    while 2.0 * box_half(m, c, d_factor, d, k_star + 1) <= w.side {
        k_star += 1;
    }

    let eps = 1e-9 * w.side;
    let wlo = -w.half() - eps;
    let whi = w.half() + eps;
    let mut annuli = Vec::with_capacity(k_star + 1);
    let mut total = 0u64;
    for k in 0..=k_star {
        let h = box_half(m, c, d_factor, d, k);
        let s = (m * c.powi(k as i32) / d as f64).exp();
        let anchor: Vec<f64> = center.iter().map(|&x| x - h).collect();
        let mut per_axis = (2.0 * h / s).floor() as u64;
        // Keep every grid line inside Box_k in floating point.
        while per_axis > 0 && anchor.iter().zip(center).any(|(&a, &x)| a + per_axis as f64 * s > x + h) {
            per_axis -= 1;
        }
        let grid = (per_axis as u128).pow(d as u32);
        total = total.saturating_add(grid.min(u64::MAX as u128) as u64);
        if total > MAX_BOX_CELLS {
            return Err(Error::SizeCap {
                requested: total,
                cap: MAX_BOX_CELLS,
            });
        }
        let inner_half = (k > 0).then(|| box_half(m, c, d_factor, d, k - 1));
        let inner: Option<(Vec<f64>, Vec<f64>)> = inner_half.map(|ih| {
            (
                center.iter().map(|&x| x - ih).collect(),
                center.iter().map(|&x| x + ih).collect(),
            )
        });

        let mut ann = Annulus {
            k,
            outer_half: h,
            inner_half,
            sub_side: s,
            anchor,
            per_axis,
            cells: Vec::new(),
            index: HashMap::new(),
            leaders: Vec::new(),
            good: Vec::new(),
            f1: None,
        };
        let mut idx = vec![0u64; d];
        for code in 0..grid as u64 {
            let mut c2 = code;
            for j in idx.iter_mut() {
                *j = c2 % per_axis;
                c2 /= per_axis;
            }
            let inside_window = (0..d).all(|a| ann.lo(a, idx[a]) >= wlo && ann.lo(a, idx[a] + 1) <= whi);
            if !inside_window {
                continue;
            }
            let clear_of_inner = match &inner {
                None => true,
                Some((ilo, ihi)) => (0..d).any(|a| ann.lo(a, idx[a] + 1) <= ilo[a] || ann.lo(a, idx[a]) >= ihi[a]),
            };
            if clear_of_inner {
                ann.index.insert(code, ann.cells.len());
                ann.cells.push(code);
            }
        }
        ann.leaders = vec![None; ann.cells.len()];
        ann.good = vec![false; ann.cells.len()];
        annuli.push(ann);
    }

    Ok(BoxingSystem {
        center: center.to_vec(),
        m,
        c,
        d_factor,
        delta,
        k_star,
        window: *w,
        annuli,
    })
}

/// The unique sub-box containing `x` as `(annulus k, sub-box index)`.
pub fn locate_subbox(b: &BoxingSystem, x: &[f64]) -> Option<(usize, usize)> {
    b.annuli
        .iter()
        .find_map(|ann| ann.locate(x).map(|i| (ann.k, i)))
}
