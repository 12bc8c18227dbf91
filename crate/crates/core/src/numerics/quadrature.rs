//! Adaptive 61-point Gauss-Kronrod quadrature for scalar and vector integrands.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 31] = [
    0.999484410050490637571325895705811,
    0.996893484074649540271630050918695,
    0.991630996870404594858628366109486,
    0.983668123279747209970032581605663,
    0.973116322501126268374693868423707,
    0.960021864968307512216871025581798,
    0.944374444748559979415831324037439,
    0.926200047429274325879324277080474,
    0.905573307699907798546522558925958,
    0.882560535792052681543116462530226,
    0.857205233546061098958658510658944,
    0.829565762382768397442898119732502,
    0.799727835821839083013668942322683,
    0.767777432104826194917977340974503,
    0.733790062453226804726171131369528,
    0.697850494793315796932292388026640,
    0.660061064126626961370053668149271,
    0.620526182989242861140477556431189,
    0.579345235826361691756024932172540,
    0.536624148142019899264169793311073,
    0.492480467861778574993693061207709,
    0.447033769538089176780609900322854,
    0.400401254830394392535476211542661,
    0.352704725530878113471037207089374,
    0.304073202273625077372677107199257,
    0.254636926167889846439805129817805,
    0.204525116682309891438957671002025,
    0.153869913608583546963794672743256,
    0.102806937966737030147096751318001,
    0.051471842555317695833025213166723,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 15] = [
    0.007968192496166605615465883474674,
    0.018466468311090959142302131912047,
    0.028784707883323369349719179611292,
    0.038799192569627049596801936446348,
    0.048402672830594052902938140422808,
    0.057493156217619066481721689402056,
    0.065974229882180495128128515115962,
    0.073755974737705206268243850022191,
    0.080755895229420215354694938460530,
    0.086899787201082979802387530715126,
    0.092122522237786128717632707087619,
    0.096368737174644259639468626351810,
    0.099593420586795267062780282103569,
    0.101762389748405504596428952168554,
    0.102852652893558840341285636705415,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 31] = [
    0.001389013698677007624551591226760,
    0.003890461127099884051267201844516,
    0.006630703915931292173319826369750,
    0.009273279659517763428441146892024,
    0.011823015253496341742232898853251,
    0.014369729507045804812451432443580,
    0.016920889189053272627572289420322,
    0.019414141193942381173408951050128,
    0.021828035821609192297167485738339,
    0.024191162078080601365686370725232,
    0.026509954882333101610601709335075,
    0.028754048765041292843978785354334,
    0.030907257562387762472884252943092,
    0.032981447057483726031814191016854,
    0.034979338028060024137499670731468,
    0.036882364651821229223911065617136,
    0.038678945624727592950348651532281,
    0.040374538951535959111995279752468,
    0.041969810215164246147147541285970,
    0.043452539701356069316831728117073,
    0.044814800133162663192355551616723,
    0.046059238271006988116271735559374,
    0.047185546569299153945261478181099,
    0.048185861757087129140779492298305,
    0.049055434555029778887528165367238,
    0.049795683427074206357811569379942,
    0.050405921402782346840893085653585,
    0.050881795898749606492297473049805,
    0.051221547849258772170656282604944,
    0.051426128537459025933862879215781,
    0.051494729429451567558340433647099,
];

/// Stopping rule for [`integrate_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct QuadraturePolicy<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadraturePolicy<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(1e-12), rel_tol: T::zero(), max_subdivisions: 2000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate<T, const N: usize> {
    pub value: [T; N],
    pub error: T,
    pub intervals: usize,
    pub evaluations: usize,
}

/// The 61-point abscissae on `[a, b]`, in the order the rule evaluates them.
pub fn gk61_nodes<T: Real>(a: T, b: T) -> Vec<T> {
    let c = (a + b) / T::lit(2.0);
    let h = (b - a) / T::lit(2.0);
    let mut out = vec![c];
    for x in XGK.iter().take(30) {
        let d = h * T::lit(*x);
        out.push(c - d);
        out.push(c + d);
    }
    out
}

fn rescale<T: Real>(err: T, resabs: T, resasc: T) -> T {
    let mut e = err.abs();
    if resasc != T::zero() && e != T::zero() {
        let s = (T::lit(200.0) * e / resasc).powf(T::lit(1.5));
        e = if s < T::one() { resasc * s } else { resasc };
    }
    let eps = T::epsilon();
    if resabs > T::min_positive_value() / (T::lit(50.0) * eps) {
        e = e.max(T::lit(50.0) * eps * resabs);
    }
    e
}

/// One application of the 61-point rule. Returns the Kronrod value and the
/// largest per-component error estimate.
pub fn gk61<T: Real, const N: usize, F: FnMut(T) -> [T; N]>(f: &mut F, a: T, b: T) -> ([T; N], T) {
    let c = (a + b) / T::lit(2.0);
    let h = (b - a) / T::lit(2.0);
    let mut lo = [[T::zero(); N]; 30];
    let mut hi = [[T::zero(); N]; 30];
    let fc = f(c);
    for j in 0..30 {
        let d = h * T::lit(XGK[j]);
        lo[j] = f(c - d);
        hi[j] = f(c + d);
    }
    let mut value = [T::zero(); N];
    let mut worst = T::zero();
    for k in 0..N {
        let mut kron = fc[k] * T::lit(WGK[30]);
        let mut gauss = T::zero();
        let mut rabs = kron.abs();
        for j in 0..30 {
            let w = T::lit(WGK[j]);
            let s = lo[j][k] + hi[j][k];
            kron += w * s;
            rabs += w * (lo[j][k].abs() + hi[j][k].abs());
            if j % 2 == 1 {
                gauss += T::lit(WG[j / 2]) * s;
            }
        }
        let mean = kron / T::lit(2.0);
        let mut rasc = T::lit(WGK[30]) * (fc[k] - mean).abs();
        for j in 0..30 {
            rasc += T::lit(WGK[j]) * ((lo[j][k] - mean).abs() + (hi[j][k] - mean).abs());
        }
        let ah = h.abs();
        value[k] = kron * h;
        let e = rescale((kron - gauss) * h, rabs * ah, rasc * ah);
        worst = worst.max(e);
    }
    (value, worst)
}

struct Piece<T, const N: usize> {
    a: T,
    b: T,
    value: [T; N],
    error: T,
}

/// Globally adaptive integration of a vector integrand over
/// `[breaks[0], breaks[last]]`, starting with one panel per gap in `breaks`.
pub fn integrate_adaptive_vec<T: Real, const N: usize, F: FnMut(T) -> [T; N]>(
    mut f: F,
    breaks: &[T],
    policy: &QuadraturePolicy<T>,
) -> Result<Estimate<T, N>> {
    if breaks.len() < 2 {
        return Err(Error::InvalidParameter("quadrature needs at least two break points".into()));
    }
    let mut pieces: Vec<Piece<T, N>> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk61(&mut f, w[0], w[1]);
        pieces.push(Piece { a: w[0], b: w[1], value, error });
    }
    let mut evaluations = 61 * pieces.len();
    loop {
        let mut total = [T::zero(); N];
        let mut err = T::zero();
        let mut worst = 0;
        for (i, p) in pieces.iter().enumerate() {
            for k in 0..N {
                total[k] += p.value[k];
            }
            err += p.error;
            if p.error > pieces[worst].error {
                worst = i;
            }
        }
        let scale = total.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let target = policy.abs_tol.max(policy.rel_tol * scale);
        if err <= target || pieces.is_empty() {
            return Ok(Estimate { value: total, error: err, intervals: pieces.len(), evaluations });
        }
        if pieces.len() >= policy.max_subdivisions {
            return Err(Error::IntegrationBudget {
                subdivisions: pieces.len(),
                estimate: err.as_f64(),
            });
        }
        let p = pieces.swap_remove(worst);
        let mid = (p.a + p.b) / T::lit(2.0);
        if mid <= p.a.min(p.b) || mid >= p.a.max(p.b) {
            // Interval can no longer be split in this precision.
            return Err(Error::IntegrationBudget { subdivisions: pieces.len() + 1, estimate: err.as_f64() });
        }
        let (v1, e1) = gk61(&mut f, p.a, mid);
        let (v2, e2) = gk61(&mut f, mid, p.b);
        evaluations += 122;
        pieces.push(Piece { a: p.a, b: mid, value: v1, error: e1 });
        pieces.push(Piece { a: mid, b: p.b, value: v2, error: e2 });
    }
}

/// Scalar convenience wrapper. `a > b` gives the negated integral.
pub fn integrate_adaptive<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    policy: &QuadraturePolicy<T>,
) -> Result<Estimate<T, 1>> {
    if a == b {
        return Ok(Estimate { value: [T::zero()], error: T::zero(), intervals: 0, evaluations: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, T::one()) } else { (b, a, -T::one()) };
    let mut est = integrate_adaptive_vec(|t| [f(t)], &[lo, hi], policy)?;
    est.value[0] *= sign;
    Ok(est)
}
