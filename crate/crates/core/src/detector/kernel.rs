//! Sliding complex correlator over split real/imaginary `f32` lanes.
//!
//! Each candidate position evaluates `K` references against the same window
//! of received samples. An AVX2+FMA variant is selected at run time on
//! x86_64; everything else uses the portable loop.

use crate::Cf64;

const W: usize = 8;

/// Split-format copy of complex samples.
#[derive(Debug, Clone)]
pub(crate) struct Lanes {
    pub re: Vec<f32>,
    pub im: Vec<f32>,
}

impl Lanes {
    pub fn from_samples(s: &[Cf64]) -> Self {
        Lanes {
            re: s.iter().map(|z| z.re as f32).collect(),
            im: s.iter().map(|z| z.im as f32).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }
}

/// Best candidate of a scan. Ties keep the earliest position, then the
/// lowest reference index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Peak {
    pub metric_sq: f32,
    pub position: usize,
    pub reference: usize,
}

macro_rules! dot_body {
    ($K:expr, $r_re:expr, $r_im:expr, $refs:expr, $fma:ident) => {{
        let n = $refs[0].len();
        let mut acc_re = [[0f32; W]; $K];
        let mut acc_im = [[0f32; W]; $K];
        let chunks = n / W;
        for c in 0..chunks {
            let o = c * W;
            let a: &[f32; W] = $r_re[o..o + W].try_into().unwrap();
            let b: &[f32; W] = $r_im[o..o + W].try_into().unwrap();
            for k in 0..$K {
                let sr: &[f32; W] = $refs[k].re[o..o + W].try_into().unwrap();
                let si: &[f32; W] = $refs[k].im[o..o + W].try_into().unwrap();
                for l in 0..W {
                    // r * conj(s)
                    acc_re[k][l] = $fma!(a[l], sr[l], $fma!(b[l], si[l], acc_re[k][l]));
                    acc_im[k][l] = $fma!(b[l], sr[l], $fma!(-a[l], si[l], acc_im[k][l]));
                }
            }
        }
        let mut out = [(0f32, 0f32); $K];
        for k in 0..$K {
            let mut re = 0f32;
            let mut im = 0f32;
            for l in 0..W {
                re += acc_re[k][l];
                im += acc_im[k][l];
            }
            for i in chunks * W..n {
                re += $r_re[i] * $refs[k].re[i] + $r_im[i] * $refs[k].im[i];
                im += $r_im[i] * $refs[k].re[i] - $r_re[i] * $refs[k].im[i];
            }
            out[k] = (re, im);
        }
        out
    }};
}

macro_rules! plain_mac {
    ($a:expr, $b:expr, $c:expr) => {
        $a * $b + $c
    };
}

macro_rules! fused_mac {
    ($a:expr, $b:expr, $c:expr) => {
        $a.mul_add($b, $c)
    };
}

macro_rules! scan_body {
    ($K:expr, $r:expr, $refs:expr, $first:expr, $count:expr, $fma:ident) => {{
        let n = $refs[0].len();
        let mut best = Peak {
            metric_sq: -1.0,
            position: $first,
            reference: 0,
        };
        for p in $first..$first + $count {
            let r_re = &$r.re[p..p + n];
            let r_im = &$r.im[p..p + n];
            let dots = dot_body!($K, r_re, r_im, $refs, $fma);
            for (k, (re, im)) in dots.iter().enumerate() {
                let m = re * re + im * im;
                if m > best.metric_sq {
                    best = Peak {
                        metric_sq: m,
                        position: p,
                        reference: k,
                    };
                }
            }
        }
        best
    }};
}

fn scan_portable<const K: usize>(r: &Lanes, refs: [&Lanes; K], first: usize, count: usize) -> Peak {
    scan_body!(K, r, refs, first, count, plain_mac)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2,fma")]
unsafe fn scan_avx2<const K: usize>(r: &Lanes, refs: [&Lanes; K], first: usize, count: usize) -> Peak {
    scan_body!(K, r, refs, first, count, fused_mac)
}

fn use_avx2() -> bool {
    #[cfg(target_arch = "x86_64")]
    {
        static FLAG: std::sync::OnceLock<bool> = std::sync::OnceLock::new();
        *FLAG.get_or_init(|| {
            is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma")
        })
    }
    #[cfg(not(target_arch = "x86_64"))]
    {
        false
    }
}

/// Scans positions `first..first + count` of `r` against every reference.
/// All references must share one length and `r` must hold the last window.
pub(crate) fn scan<const K: usize>(r: &Lanes, refs: [&Lanes; K], first: usize, count: usize) -> Peak {
    assert!(K > 0 && count > 0);
    let n = refs[0].len();
    assert!(refs.iter().all(|s| s.len() == n));
    assert!(first + count - 1 + n <= r.len());
    #[cfg(target_arch = "x86_64")]
    if use_avx2() {
        // SAFETY: the required CPU features were detected above.
        return unsafe { scan_avx2(r, refs, first, count) };
    }
    scan_portable(r, refs, first, count)
}
