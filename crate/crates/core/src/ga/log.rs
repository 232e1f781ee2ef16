use std::io::{Read, Write};

use super::GenerationRecord;

pub const EVOLUTION_LOG_HEADER: &str = "generation,aic,mse,k,equation";

/// Writes one CSV row per generation under [`EVOLUTION_LOG_HEADER`].
pub fn write_evolution_log<W: Write>(history: &[GenerationRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in history {
        w.serialize(rec)?;
    }
    if history.is_empty() {
        w.write_record(EVOLUTION_LOG_HEADER.split(','))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_evolution_log<R: Read>(input: R) -> csv::Result<Vec<GenerationRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
