use crate::error::{Error, Result};
use crate::forward::{simulate, ProblemConfig, SystemKind};
use crate::grid::lp_norm;

/// Relative `C⁰L²` distance between the bidomain and monodomain potentials
/// for the same data and discretization. Requires `M_e = λ M_i`.
pub fn monodomain_limit_check(config: &ProblemConfig) -> Result<f64> {
    let ops = config.ops();
    let lam = ops.lambda();
    match ops.proportionality() {
        Some(l) if (l - lam).abs() <= 1e-12 * lam => {}
        Some(l) => {
            return Err(Error::Config(format!(
                "M_e = {l}·M_i but the configured lambda is {lam}"
            )))
        }
        None => return Err(Error::Config("M_e is not proportional to M_i".into())),
    }
    let bid = simulate(&config.with_kind(SystemKind::Bidomain)?)?;
    let mono = simulate(&config.with_kind(SystemKind::Monodomain)?)?;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for k in 0..config.grid().n_frames() {
        let d = bid.phi_tr.frame(k).zip_map(mono.phi_tr.frame(k), |a, b| a - b);
        num = num.max(lp_norm(&d, 2.0));
        den = den.max(lp_norm(mono.phi_tr.frame(k), 2.0));
    }
    Ok(if den > 0.0 { num / den } else { num })
}
