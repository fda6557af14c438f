use std::io::{self, Write};

use hftsim_core::harness::StylizedVerdict;
use hftsim_core::LiquidityReport;

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{v:.digits$}"))
}

fn pct(x: Option<f64>) -> String {
    x.map_or_else(|| "undefined".to_string(), |v| format!("{:.3}%", v * 100.0))
}

pub fn write_report<W: Write>(out: &mut W, r: &LiquidityReport) -> io::Result<()> {
    writeln!(out, "Volume          {} ({} HFT)", r.volume, r.hft_volume)?;
    writeln!(out, "Tightness       {}", opt(r.tightness, 3))?;
    writeln!(out, "Resiliency      {}", opt(r.resiliency, 5))?;
    writeln!(out, "Depth           {:.1}", r.depth)?;
    writeln!(out, "Execution rate  {}", pct(r.execution_rate))?;
    writeln!(out, "  normal resting {}", pct(r.execution_rate_normal_resting))?;
    writeln!(out, "Volatility      {}", pct(r.volatility))?;
    writeln!(out, "Kurtosis        {}", opt(r.kurtosis, 3))?;
    match r.sq_return_autocorr {
        Some(ac) => {
            let lags: Vec<String> = ac.iter().map(|a| format!("{a:.3}")).collect();
            writeln!(out, "Sq-return ACF   {}", lags.join(" "))
        }
        None => writeln!(out, "Sq-return ACF   undefined"),
    }
}

pub fn write_verdict<W: Write>(out: &mut W, v: &StylizedVerdict) -> io::Result<()> {
    writeln!(out, "runs            {} ({} defined)", v.runs, v.defined_runs)?;
    writeln!(out, "mean kurtosis   {}", opt(v.mean_kurtosis, 3))?;
    for (lag, a) in v.mean_sq_return_autocorr.iter().enumerate() {
        writeln!(out, "sq-return ACF {} {}", lag + 1, opt(*a, 3))?;
    }
    writeln!(out, "{}", if v.pass { "PASS" } else { "FAIL" })
}
