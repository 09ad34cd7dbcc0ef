//! Datasets, operation mixes and benchmark reports.

pub mod dataset;
pub mod run;

pub use dataset::{gen_by_function, gen_lognormal, gen_uniform, generate, AnyDataset, Dataset, GenFn, Provenance};
pub use run::{
    order_bits, run_baseline, run_lipp, run_workload, sweep, Baseline, BenchIndex, Mix, Plan, Report, Structure,
    LATENCY_SAMPLE,
    SweepParam, WorkloadSpec,
};
