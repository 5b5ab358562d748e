use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{
    enu_from_azel, enu_to_ecef, illumination_state_with, solar_position_ecef, IlluminationState, IlluminationTag,
    ObservatorySite, ShadowModel,
};
use crate::catalogue::{Catalogue, DetectionEvent, Population};
use crate::error::Result;

pub fn tag_event(e: &DetectionEvent, site: &ObservatorySite, model: &ShadowModel) -> Result<IlluminationTag> {
    let sat = enu_to_ecef(&enu_from_azel(e.azimuth_deg, e.elevation_deg, e.range_km), site);
    illumination_state_with(&sat, &solar_position_ecef(&e.epoch_utc), model)
}

/// Attaches an illumination tag to every event. Runs in parallel; each tag
/// depends only on its own event.
pub fn tag_catalogue(mut catalogue: Catalogue, site: &ObservatorySite, model: &ShadowModel) -> Result<Catalogue> {
    let tags = catalogue
        .events
        .par_iter()
        .map(|e| tag_event(e, site, model))
        .collect::<Result<Vec<_>>>()?;
    for (e, t) in catalogue.events.iter_mut().zip(tags) {
        e.illumination = Some(t);
    }
    Ok(catalogue)
}

/// Illuminated fraction of tagged stacked events per population.
pub fn illuminated_fraction(catalogue: &Catalogue) -> BTreeMap<Population, f64> {
    let mut counts: BTreeMap<Population, (usize, usize)> = BTreeMap::new();
    for e in catalogue.stacked() {
        if let Some(state) = e.state() {
            let c = counts.entry(catalogue.population_of(e.norad_id)).or_default();
            c.1 += 1;
            if state == IlluminationState::Illuminated {
                c.0 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(p, (lit, n))| (p, lit as f64 / n as f64))
        .collect()
}
