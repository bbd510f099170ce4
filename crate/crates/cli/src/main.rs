mod args;
mod commands;
mod io;

use args::{Cli, Command};
use clap::Parser;

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Decode(a) => commands::decode_cmd(a),
        Command::Simulate(a) => commands::simulate_cmd(a),
        Command::Enumerate(a) => commands::enumerate_cmd(a),
        Command::Train(a) => commands::train_cmd(a),
        Command::Design(a) => commands::design_cmd(a),
        Command::Bound(a) => commands::bound_cmd(a),
        Command::DeriveLut(a) => commands::derive_lut_cmd(a),
        Command::LutToCoeffs(a) => commands::lut_to_coeffs_cmd(a),
        Command::BuildQc(a) => commands::build_qc_cmd(a),
        Command::Info(a) => commands::info_cmd(a),
    }
}
