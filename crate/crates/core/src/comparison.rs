//! Ideal-conductor forces of earlier Casimir experiments, for comparing
//! interaction strength across geometries.

use crate::error::Result;
use crate::lifshitz::{ideal_casimir_force, IdealGeometry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Plate { area_m2: f64 },
    Sphere { radius_m: f64 },
}

/// One published experiment with its transcribed ideal-conductor force.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub reference: &'static str,
    pub year: u32,
    pub geometry: Geometry,
    pub separation_nm: f64,
    pub force_n: f64,
}

impl Row {
    pub fn ideal_force(&self) -> Result<f64> {
        let separation = self.separation_nm * 1e-9;
        ideal_casimir_force(match self.geometry {
            Geometry::Plate { area_m2 } => IdealGeometry::PlatePlate { area: area_m2, separation },
            Geometry::Sphere { radius_m } => IdealGeometry::SpherePlate { radius: radius_m, separation },
        })
    }
}

pub const PLATE_PLATE: [Row; 6] = [
    Row { reference: "bressi2002measurement", year: 2002, geometry: Geometry::Plate { area_m2: 1.44e-6 }, separation_nm: 500.0, force_n: 2.99718e-8 },
    Row { reference: "norte2018platform", year: 2018, geometry: Geometry::Plate { area_m2: 1.152e-10 }, separation_nm: 100.0, force_n: 1.49859e-9 },
    Row { reference: "fong2019phonon", year: 2019, geometry: Geometry::Plate { area_m2: 1.089e-7 }, separation_nm: 250.0, force_n: 3.62659e-8 },
    Row { reference: "perez2020system", year: 2020, geometry: Geometry::Plate { area_m2: 8.0e-12 }, separation_nm: 70.0, force_n: 4.3344e-10 },
    Row { reference: "pate2020casimir", year: 2020, geometry: Geometry::Plate { area_m2: 1.07518e-7 }, separation_nm: 585.0, force_n: 1.19423e-9 },
    Row { reference: "this work", year: 2025, geometry: Geometry::Plate { area_m2: 4.9e-7 }, separation_nm: 190.0, force_n: 4.89117e-7 },
];

pub const SPHERE_PLATE: [Row; 29] = [
    Row { reference: "lamoreaux1997demonstration", year: 1997, geometry: Geometry::Sphere { radius_m: 113000e-6 }, separation_nm: 600.0, force_n: 1.42528e-9 },
    Row { reference: "mohideen1998precision", year: 1998, geometry: Geometry::Sphere { radius_m: 98e-6 }, separation_nm: 100.0, force_n: 2.66995e-10 },
    Row { reference: "chan2001quantum", year: 2001, geometry: Geometry::Sphere { radius_m: 100e-6 }, separation_nm: 75.7, force_n: 6.28042e-10 },
    Row { reference: "decca2003measurement", year: 2003, geometry: Geometry::Sphere { radius_m: 296e-6 }, separation_nm: 200.0, force_n: 1.00804e-10 },
    Row { reference: "decca2007tests", year: 2007, geometry: Geometry::Sphere { radius_m: 151.3e-6 }, separation_nm: 160.0, force_n: 1.00636e-10 },
    Row { reference: "van2008measurement", year: 2008, geometry: Geometry::Sphere { radius_m: 50e-6 }, separation_nm: 12.0, force_n: 7.8832e-8 },
    Row { reference: "munday2008measurements", year: 2008, geometry: Geometry::Sphere { radius_m: 19.9e-6 }, separation_nm: 30.0, force_n: 2.00801e-9 },
    Row { reference: "van2008influence", year: 2008, geometry: Geometry::Sphere { radius_m: 50e-6 }, separation_nm: 20.0, force_n: 1.70277e-8 },
    Row { reference: "jourdan2009quantitative", year: 2009, geometry: Geometry::Sphere { radius_m: 20e-6 }, separation_nm: 100.0, force_n: 5.44887e-11 },
    Row { reference: "de2009halving", year: 2009, geometry: Geometry::Sphere { radius_m: 100e-6 }, separation_nm: 50.0, force_n: 2.17955e-9 },
    Row { reference: "masuda2009limits", year: 2009, geometry: Geometry::Sphere { radius_m: 207000e-6 }, separation_nm: 500.0, force_n: 4.51167e-9 },
    Row { reference: "munday2009measured", year: 2009, geometry: Geometry::Sphere { radius_m: 19.9e-6 }, separation_nm: 18.0, force_n: 9.29634e-9 },
    Row { reference: "torricelli2011casimir", year: 2011, geometry: Geometry::Sphere { radius_m: 10e-6 }, separation_nm: 60.0, force_n: 1.26131e-10 },
    Row { reference: "sushkov2011observation", year: 2011, geometry: Geometry::Sphere { radius_m: 156000e-6 }, separation_nm: 700.0, force_n: 1.2391e-9 },
    Row { reference: "chang2012gradient", year: 2012, geometry: Geometry::Sphere { radius_m: 41.3e-6 }, separation_nm: 50.0, force_n: 9.00153e-10 },
    Row { reference: "garcia2012casimir", year: 2012, geometry: Geometry::Sphere { radius_m: 4000e-6 }, separation_nm: 100.0, force_n: 1.08977e-8 },
    Row { reference: "banishev2013demonstration", year: 2013, geometry: Geometry::Sphere { radius_m: 61.7e-6 }, separation_nm: 222.0, force_n: 1.53639e-11 },
    Row { reference: "bimonte2016isoelectronic", year: 2016, geometry: Geometry::Sphere { radius_m: 149.3e-6 }, separation_nm: 200.0, force_n: 5.08448e-11 },
    Row { reference: "eerkens2017investigations", year: 2017, geometry: Geometry::Sphere { radius_m: 100e-6 }, separation_nm: 55.0, force_n: 1.63753e-9 },
    Row { reference: "xu2018reducing", year: 2018, geometry: Geometry::Sphere { radius_m: 60.8e-6 }, separation_nm: 245.0, force_n: 1.12637e-11 },
    Row { reference: "liu2019examining", year: 2019, geometry: Geometry::Sphere { radius_m: 43.446e-6 }, separation_nm: 250.0, force_n: 7.57541e-12 },
    Row { reference: "stange2019building", year: 2019, geometry: Geometry::Sphere { radius_m: 55e-6 }, separation_nm: 60.0, force_n: 6.93722e-10 },
    Row { reference: "liu2019precision", year: 2019, geometry: Geometry::Sphere { radius_m: 43e-6 }, separation_nm: 250.0, force_n: 7.49765e-12 },
    Row { reference: "liu2021demonstration", year: 2021, geometry: Geometry::Sphere { radius_m: 60.35e-6 }, separation_nm: 250.0, force_n: 1.05229e-11 },
    Row { reference: "liu2021experimental", year: 2021, geometry: Geometry::Sphere { radius_m: 60.35e-6 }, separation_nm: 250.0, force_n: 1.05229e-11 },
    Row { reference: "bimonte2021measurement", year: 2021, geometry: Geometry::Sphere { radius_m: 149.7e-6 }, separation_nm: 200.0, force_n: 5.0981e-11 },
    Row { reference: "xu2022non", year: 2022, geometry: Geometry::Sphere { radius_m: 69.1e-6 }, separation_nm: 175.0, force_n: 3.51269e-11 },
    Row { reference: "xu2022observation", year: 2022, geometry: Geometry::Sphere { radius_m: 35e-6 }, separation_nm: 50.0, force_n: 7.62842e-10 },
    Row { reference: "xu2024observation", year: 2024, geometry: Geometry::Sphere { radius_m: 35e-6 }, separation_nm: 100.0, force_n: 9.53552e-11 },
];

/// Transcribed plate-plate average excluding "this work", N.
pub const PLATE_PLATE_AVERAGE: f64 = 1.3873e-8;

/// Row mean of recomputed forces over `rows`.
pub fn mean_force<'a>(rows: impl IntoIterator<Item = &'a Row>) -> Result<f64> {
    let mut n = 0usize;
    let mut sum = 0.0;
    for r in rows {
        sum += r.ideal_force()?;
        n += 1;
    }
    Ok(sum / n as f64)
}
