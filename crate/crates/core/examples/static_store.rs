//! The particle store is allocated once: step a filter and watch the store
//! counters stay flat while resampling only copies handles.

use apinfer::filter::{Algorithm, Filter, FilterConfig};
use apinfer::model::{simulate, ParamVector, RngStream};
use apinfer::models::{SinModel, SIN_TRUE_THETA};

fn main() -> apinfer::Result<()> {
    let model = SinModel::plain();
    let obs = simulate(&model, &ParamVector::continuous(vec![SIN_TRUE_THETA]), 500, &mut RngStream::new(2, 0))?.observations;

    let mut f = Filter::new(&model, Algorithm::Api, FilterConfig::new(1000, 0))?;
    f.initialize(&obs[0])?;
    for (t, y) in obs.iter().enumerate().skip(1) {
        let s = f.step(y)?;
        if t % 100 == 0 {
            let c = f.store().counters();
            println!(
                "t={t:>3}  distinct ancestors {:>4}  adf updates {:>4}  payload reallocs {}  handle copies {}",
                s.distinct_ancestors, s.adf_updates, c.payload_reallocs, c.index_copies
            );
        }
    }
    Ok(())
}
