//! Orthonormal filter-bank coefficient tables.
//!
//! Regenerated by `scripts/regen_filters.py` (60-digit arithmetic): the
//! Daubechies banks come from spectral factorization of the half-band
//! polynomial, the Coiflets from a Gauss-Newton solve of their defining
//! equations (orthonormality, DC gain sqrt(2), vanishing wavelet and scaling
//! moments) seeded with the classic published tables. Do not edit by hand;
//! rerun the script instead. All banks satisfy the orthonormality identities
//! to better than 1e-14 in f64.

pub(super) const HAAR: [f64; 2] = [
    0.70710678118654752,
    0.70710678118654752,
];

pub(super) const DB4: [f64; 8] = [
    0.23037781330889650,
    0.71484657055291565,
    0.63088076792985891,
    -0.027983769416859854,
    -0.18703481171909308,
    0.030841381835560764,
    0.032883011666885200,
    -0.010597401785069032,
];

pub(super) const DB8: [f64; 16] = [
    0.054415842243104010,
    0.31287159091429997,
    0.67563073629728981,
    0.58535468365420671,
    -0.015829105256349306,
    -0.28401554296154693,
    0.00047248457391328277,
    0.12874742662047846,
    -0.017369301001807546,
    -0.044088253930794752,
    0.013981027917398282,
    0.0087460940474057767,
    -0.0048703529934515743,
    -0.00039174037337694705,
    0.00067544940645056937,
    -0.00011747678412476953,
];

pub(super) const COIF4: [f64; 12] = [
    0.016387336462960283,
    -0.041464936787084973,
    -0.067372554721614156,
    0.38611006682686565,
    0.81272363544961618,
    0.41700518441898890,
    -0.076488599080645497,
    -0.059434418645987975,
    0.023680171947136494,
    0.0056114348192803502,
    -0.0018232088709133492,
    -0.00072054944550685749,
];

pub(super) const COIF10: [f64; 30] = [
    -9.6040611589577874e-8,
    -1.6237979559931730e-7,
    2.0612328100402676e-6,
    3.7007244293326440e-6,
    -2.1270368843679097e-5,
    -4.1219828789644186e-5,
    0.00014035746633393325,
    0.00030185771644376563,
    -0.00063756490069243880,
    -0.0016616249053659830,
    0.0024315972909976449,
    0.0067615003748239068,
    -0.0091595655670316163,
    -0.019758287433817513,
    0.032674923116194135,
    0.041287141027538757,
    -0.10556342539823305,
    -0.062036448882118551,
    0.43798427028529647,
    0.77429357258915284,
    0.42156934200735674,
    -0.052047887693897889,
    -0.091921403027408432,
    0.028170082017785743,
    0.023408284363865302,
    -0.010131666924412667,
    -0.0041593065142786264,
    0.0021783076818466389,
    0.00035857724076419550,
    -0.00021208289724710947,
];
