//! Exact arithmetic for measurement amplitudes and probabilities.
//!
//! Every amplitude arising from measuring Bell pairs in the two conjugate
//! bases has the form k/√2^p with integer k, and every outcome probability
//! is dyadic. Keeping both exact lets tests compare whole distributions
//! with `==` instead of tolerances.

/// Exact value `num / √2^pow`, canonicalized so `num` is odd or zero
/// (pairs of √2 factors are absorbed into the numerator).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Amplitude {
    num: i64,
    root_half_pow: u32,
}

impl Amplitude {
    pub const ZERO: Amplitude = Amplitude {
        num: 0,
        root_half_pow: 0,
    };
    pub const ONE: Amplitude = Amplitude {
        num: 1,
        root_half_pow: 0,
    };

    pub fn new(num: i64, root_half_pow: u32) -> Amplitude {
        let mut a = Amplitude { num, root_half_pow };
        if a.num == 0 {
            a.root_half_pow = 0;
        }
        while a.num % 2 == 0 && a.num != 0 && a.root_half_pow >= 2 {
            a.num /= 2;
            a.root_half_pow -= 2;
        }
        a
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    /// Squared magnitude — an exact dyadic probability.
    pub fn prob(self) -> Dyadic {
        Dyadic::new((self.num * self.num) as u64, self.root_half_pow)
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 * (-(self.root_half_pow as f64) / 2.0).exp2()
    }
}

impl std::ops::Mul for Amplitude {
    type Output = Amplitude;

    fn mul(self, other: Amplitude) -> Amplitude {
        Amplitude::new(
            self.num * other.num,
            self.root_half_pow + other.root_half_pow,
        )
    }
}

/// Exact sum.
///
/// # Panics
/// Panics when the operands sit an odd number of √2 factors apart: such
/// a sum is not of the form k/√2^p. Summing expansion terms of one state
/// never hits this case.
impl std::ops::Add for Amplitude {
    type Output = Amplitude;

    fn add(self, other: Amplitude) -> Amplitude {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (hi, lo) = if self.root_half_pow >= other.root_half_pow {
            (self, other)
        } else {
            (other, self)
        };
        let diff = hi.root_half_pow - lo.root_half_pow;
        assert!(
            diff % 2 == 0,
            "cannot add amplitudes separated by an odd power of sqrt(2)"
        );
        Amplitude::new(hi.num + (lo.num << (diff / 2)), hi.root_half_pow)
    }
}

/// Exact value `num / 2^pow`, canonicalized to lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: u64,
    pow: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, pow: 0 };
    pub const ONE: Dyadic = Dyadic { num: 1, pow: 0 };

    pub fn new(num: u64, pow: u32) -> Dyadic {
        let mut d = Dyadic { num, pow };
        if d.num == 0 {
            d.pow = 0;
        }
        while d.num.is_multiple_of(2) && d.num != 0 && d.pow > 0 {
            d.num /= 2;
            d.pow -= 1;
        }
        d
    }

    pub fn is_one(self) -> bool {
        self == Dyadic::ONE
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 * (-(self.pow as f64)).exp2()
    }
}

impl std::ops::Add for Dyadic {
    type Output = Dyadic;

    fn add(self, other: Dyadic) -> Dyadic {
        let pow = self.pow.max(other.pow);
        Dyadic::new(
            (self.num << (pow - self.pow)) + (other.num << (pow - other.pow)),
            pow,
        )
    }
}
