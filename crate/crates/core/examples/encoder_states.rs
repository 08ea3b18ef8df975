//! Drives the hybrid Sagnac encoder in both modes and prints the states.
//!
//! cargo run --example encoder_states

use std::f64::consts::FRAC_PI_2;

use hqkd::encoder::{
    qpsk_symbol, set_mode, DvState, EncoderTiming, HybridEncoder, JonesState, SwitchState, QPSK_PHASES,
};

fn show(name: &str, s: &JonesState) {
    println!(
        "  {name:<14} H = {:+.4}{:+.4}i   V = {:+.4}{:+.4}i",
        s.h.re, s.h.im, s.v.re, s.v.im
    );
}

pub fn main() -> hqkd::Result<()> {
    // 1 m of extra fiber in the delay line, n_f = 1.468
    let timing = EncoderTiming::new(1.0, 1.468)?;

    let pol = HybridEncoder::polarization(timing);
    println!("polarization mode, pulse separation {:.3} ns", pol.pulse_separation() * 1e9);
    for (label, (phi_e, phi_l)) in [("D", (0.0, 0.0)), ("R", (FRAC_PI_2, 0.0)), ("L", (0.0, FRAC_PI_2))] {
        show(label, &pol.pol_state(phi_e, phi_l)?);
    }
    for s in DvState::ALL {
        println!("  {s}: phi_l - phi_e = {:+.4}", s.phase_difference());
    }
    println!(
        "  |<D|R>|^2 = {:.3}, |<R|L>|^2 = {:.3}",
        JonesState::diagonal().overlap(&JonesState::right()),
        JonesState::right().overlap(&JonesState::left())
    );

    let ph = HybridEncoder::phase(timing);
    println!("phase mode, pulse separation {:.3} ns", ph.pulse_separation() * 1e9);
    show("sigma_x e^{i pi/2} D", &ph.phase_state(&JonesState::diagonal(), FRAC_PI_2)?);
    for (k, phase) in QPSK_PHASES.iter().enumerate() {
        let s = qpsk_symbol(k, 12.4)?;
        println!("  QPSK k={k}: phase {phase:.4}  x = {:+.3}  p = {:+.3}  <n> = {:.2}", s.x(), s.p(), s.mean_photons());
    }

    match set_mode(SwitchState::Delay, SwitchState::Bypass) {
        Ok(m) => println!("unexpected mode {m:?}"),
        Err(e) => println!("mixed switches rejected: {e}"),
    }
    Ok(())
}
