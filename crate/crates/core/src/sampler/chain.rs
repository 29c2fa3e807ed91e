use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gibbs::GibbsSampler;
use super::state::ParameterState;
use super::store::{DrawHeader, DrawSink, DrawStore};
use crate::config::FitConfig;
use crate::data::PanelDataset;
use crate::error::{Error, Result};

/// Generator for chain `chain` of a run seeded with `seed`. Chains share the
/// seed and differ by stream, so they are independent and reproducible.
pub fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Header of the draw table that chain `chain` of a run produces.
pub fn chain_header(data: &PanelDataset, config: &FitConfig, chain: u64) -> DrawHeader {
    let layout = data.spec.layout();
    let mut h = DrawHeader::new(
        layout.labels().map(str::to_string).collect(),
        data.spec.countries.clone(),
        data.periods_per_day(),
        config.sampler.store_random_effects,
    );
    h.chain = chain;
    h.seed = config.sampler.seed;
    h.config_hash = config.hash();
    h.burn_in = config.sampler.burn_in;
    h.thin = config.sampler.thin;
    h
}

/// Runs one chain into memory.
pub fn run_chain(data: &PanelDataset, config: &FitConfig, chain: u64) -> Result<DrawStore> {
    let mut store = DrawStore::new(chain_header(data, config, chain));
    run_chain_into(data, config, chain, &mut store, &mut |_, _| {})?;
    Ok(store)
}

/// Runs one chain, sending every retained draw to `sink`. `progress` is
/// called after each sweep with (completed, total). Returns the final state.
pub fn run_chain_into<S: DrawSink>(
    data: &PanelDataset,
    config: &FitConfig,
    chain: u64,
    sink: &mut S,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<ParameterState> {
    config.validate_settings()?;
    if data.spec != config.model {
        return Err(Error::Config(
            "dataset was built for a different model specification".into(),
        ));
    }
    let sc = &config.sampler;
    let sampler = GibbsSampler::new(data, &config.priors, sc)?;
    let mut rng = chain_rng(sc.seed, chain);
    let mut state = sampler.initial_state(sc.init_jitter, &mut rng)?;
    let mut header = chain_header(data, config, chain);
    let total = sc.total_sweeps();
    let (dim, h_n, g_n) = (sampler.dim(), sampler.periods(), sampler.n_countries());
    let mut psi_sum = vec![vec![0.0; dim]; h_n];
    let mut zeta_sum = vec![vec![0.0; dim]; g_n];
    let mut kept = 0usize;
    for i in 0..total {
        sampler
            .sweep(&mut state, &mut rng)
            .map_err(|e| Error::Numeric(format!("chain {chain}, sweep {}: {e}", i + 1)))?;
        if i >= sc.burn_in && (i - sc.burn_in + 1).is_multiple_of(sc.thin) {
            sink.push(&header.encode(&state))?;
            kept += 1;
            if !header.random_effects {
                for (acc, row) in psi_sum.iter_mut().zip(&state.psi).chain(zeta_sum.iter_mut().zip(&state.zeta)) {
                    for (a, v) in acc.iter_mut().zip(row) {
                        *a += v;
                    }
                }
            }
        }
        progress(i + 1, total);
    }
    if !header.random_effects && kept > 0 {
        let scale = |m: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.into_iter()
                .map(|r| r.into_iter().map(|v| v / kept as f64).collect())
                .collect()
        };
        header.psi_mean = Some(scale(psi_sum));
        header.zeta_mean = Some(scale(zeta_sum));
    }
    header.n_draws = kept;
    sink.finish(&header)?;
    Ok(state)
}
