mod common;

use common::{random_mesh, random_ray, random_unit, rng, textured_model};
use impostor::editing::{deform, Affine};
use impostor::geometry::Ray;
use impostor::rendering::{render_image, Camera, RayWorkspace, RenderMode, RenderOptions};
use impostor::Vec3;
use proptest::prelude::*;
use rand::Rng;

fn mode() -> impl Strategy<Value = RenderMode> {
    prop_oneof![Just(RenderMode::EarlyIntegration), Just(RenderMode::DecodeFirst)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn weights_and_transmittance_sum_to_one(seed in any::<u64>(), mode in mode()) {
        let mut r = rng(seed);
        let model = textured_model(random_mesh(&mut r), &mut r);
        let opts = RenderOptions::default().with_mode(mode);
        let mut ws = RayWorkspace::new();
        for _ in 0..20 {
            let ray = random_ray(&model.mesh, &mut r);
            let out = ws.forward(&model, &ray, &ray.dir, &opts, None);
            let total: f64 = ws.weight.iter().sum();
            prop_assert!((total + out.transmittance - 1.0).abs() < 1e-6);
            prop_assert!(ws.weight.iter().all(|w| *w >= 0.0));
            prop_assert!(out.rgb.iter().all(|c| c.is_finite()));
        }
    }

    #[test]
    fn affine_maps_do_not_change_colour(seed in any::<u64>(), mode in mode()) {
        let mut r = rng(seed);
        let model = textured_model(random_mesh(&mut r), &mut r);
        let rows: [f64; 12] = std::array::from_fn(|i| {
            let diag = matches!(i, 0 | 5 | 10);
            if diag { r.gen_range(0.6..1.6) } else if i % 4 == 3 { r.gen_range(-2.0..2.0) } else { r.gen_range(-0.3..0.3) }
        });
        let map = Affine::from_rows(&rows);
        prop_assume!(map.inverse().is_ok() && map.linear.determinant() > 0.05);
        let warped = deform(&model, model.mesh.vertices().iter().map(|v| map.apply(v)).collect()).unwrap();
        let opts = RenderOptions::default().with_mode(mode);
        let mut ws = RayWorkspace::new();
        for _ in 0..20 {
            let ray = random_ray(&model.mesh, &mut r);
            let a = ws.forward(&model, &ray, &ray.dir, &opts, None).rgb;
            let moved = Ray::through(map.apply(&ray.origin), map.linear * ray.dir);
            let b = ws.forward(&warped, &moved, &ray.dir, &opts, None).rgb;
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).abs() < 1e-6, "{a:?} vs {b:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn images_are_reproducible(seed in any::<u64>(), threads in 2usize..6) {
        let mut r = rng(seed);
        let model = textured_model(random_mesh(&mut r), &mut r);
        let eye = random_unit(&mut r) * 4.0;
        let cam = Camera::look_at(eye, Vec3::zeros(), random_unit(&mut r), 16.0, 12, 9);
        prop_assume!(cam.is_ok());
        let cam = cam.unwrap();
        let one = RenderOptions::default();
        let a = render_image(&model, &cam, &one);
        let b = render_image(&model, &cam, &one);
        let c = render_image(&model, &cam, &one.with_threads(threads));
        prop_assert_eq!(&a.pixels, &b.pixels);
        prop_assert_eq!(&a.pixels, &c.pixels);
    }
}
