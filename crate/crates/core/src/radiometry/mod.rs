//! Radiometric front end: camera response functions, Bayer radiance
//! conversion, exposure-guidance masks, network-domain normalization and
//! display export.

mod crf;
mod mask;
mod radiance;
mod tonemap;

pub use crf::Crf;
pub use mask::{exposure_mask, ExposureMask, MaskWeighting, ALPHA_DEFAULT};
pub use radiance::{
    denormalize, normalize_for_network, to_radiance, NormKind, NormParams, RadianceDomain,
    RadianceImage,
};
pub use tonemap::tonemap_display;
