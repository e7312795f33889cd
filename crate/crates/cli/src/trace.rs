//! Comma-separated trace files.

use std::io::Write;

use lapsc_core::metrics::cycle_spread;
use lapsc_core::SimTrace;

pub fn trace_header(n: usize, clamp_currents: bool) -> Vec<String> {
    let mut h = vec!["time".to_string()];
    h.extend((1..=n).map(|j| format!("u_c_u_{j}")));
    h.extend((1..=n).map(|j| format!("u_c_l_{j}")));
    h.extend(["i_arm_u", "i_arm_l", "v_out", "i_out"].map(String::from));
    if clamp_currents {
        h.extend((1..n).map(|j| format!("i_clamp_u_{j}")));
        h.extend((1..n).map(|j| format!("i_clamp_l_{j}")));
    }
    h
}

/// One row per recorded step, in the column order of [`trace_header`].
pub fn write_trace<W: Write>(trace: &SimTrace, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(trace_header(trace.modules_per_arm, trace.has_clamp_currents))?;
    let mut rec = Vec::with_capacity(trace.width() + 1);
    for row in trace.rows() {
        rec.clear();
        rec.push(row.time.to_string());
        rec.extend(row.values.iter().map(f64::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-cycle averages of the module voltages with the deviation figures.
pub fn write_cycles<W: Write>(trace: &SimTrace, w: W) -> csv::Result<()> {
    let n = trace.modules_per_arm;
    let mut out = csv::Writer::from_writer(w);
    let mut h: Vec<String> = ["t_start", "t_end", "max_deviation", "spread"].map(String::from).to_vec();
    h.extend((1..=n).map(|j| format!("ubar_u_{j}")));
    h.extend((1..=n).map(|j| format!("ubar_l_{j}")));
    out.write_record(&h)?;
    for c in &trace.cycle_means {
        let s = cycle_spread(c, trace.nominal_module_voltage);
        let mut rec = vec![
            c.t_start.to_string(),
            c.t_end.to_string(),
            s.max_deviation.to_string(),
            s.spread.to_string(),
        ];
        rec.extend(c.upper.iter().chain(&c.lower).map(f64::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
