pub mod bench_h2;
pub mod bench_rb;
pub mod fit;
pub mod run;

use zne_core::ZneConfig;

use crate::CommonArgs;
use zne_core::FactoryKind;

pub(crate) fn zne_config(factory: FactoryKind, common: &CommonArgs, default_scales: &[f64], seed: u64) -> ZneConfig {
    ZneConfig {
        factory,
        scale_factors: common.scale_factors_or(default_scales),
        scaling: common.folding.scale_method(),
        num_to_average: common.num_to_average.unwrap_or(1),
        seed,
        parallel: false,
    }
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
