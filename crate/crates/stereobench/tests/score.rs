//! Submission scoring over directory layouts.

mod common;

use common::{hr_fixture, write_pair};
use stereobench::score::{score_submission, SceneProblem, ScoreError};
use stereobench_core::metrics::psnr_rgb;
use stereobench_core::synth::{distorted, natural_image};
use stereobench_core::View;

#[test]
fn two_scenes_aggregate_is_mean_of_four() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, sr) = (tmp.path().join("gt"), tmp.path().join("sr"));
    let mut expected = Vec::new();
    for (i, amp) in [(1u32, [2u32, 5]), (2, [9, 14])] {
        let (l, r) = (natural_image(20, 28, 10 * i), natural_image(20, 28, 10 * i + 1));
        let (dl, dr) = (distorted(&l, i, amp[0]), distorted(&r, i + 7, amp[1]));
        expected.push(psnr_rgb(&l, &dl).unwrap());
        expected.push(psnr_rgb(&r, &dr).unwrap());
        write_pair(&gt, &format!("{i:04}"), &l, &r);
        write_pair(&sr, &format!("{i:04}"), &dl, &dr);
    }
    let report = score_submission(&gt, &sr).unwrap();
    let got: Vec<f64> = report.images().iter().map(|s| s.metric.psnr_db).collect();
    assert_eq!(got, expected);
    assert_eq!(report.mean_psnr_db(), expected.iter().sum::<f64>() / 4.0);
    let order: Vec<_> = report.images().iter().map(|s| (s.scene.number, s.view)).collect();
    assert_eq!(
        order,
        [(1, View::Left), (1, View::Right), (2, View::Left), (2, View::Right)]
    );
    let ssim_mean = report.images().iter().map(|s| s.metric.ssim).sum::<f64>() / 4.0;
    assert_eq!(report.mean_ssim(), ssim_mean);
}

#[test]
fn hundred_scene_layout_covers_two_hundred_images() {
    let tmp = tempfile::tempdir().unwrap();
    let gt = tmp.path().join("gt");
    hr_fixture(&gt, 100, 12, 12);
    let report = score_submission(&gt, &gt).unwrap();
    assert_eq!(report.images().len(), 200);
    assert_eq!(report.scene_count(), 100);
    assert_eq!(report.mean_psnr_db(), f64::INFINITY);
    assert_eq!(report.mean_ssim(), 1.0);
}

#[test]
fn result_does_not_depend_on_thread_count() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, sr) = (tmp.path().join("gt"), tmp.path().join("sr"));
    for i in 1..=6u32 {
        let (l, r) = (natural_image(16, 16, i), natural_image(16, 16, i + 50));
        write_pair(&gt, &format!("{i:04}"), &l, &r);
        write_pair(&sr, &format!("{i:04}"), &distorted(&l, i, i), &distorted(&r, i, 2 * i));
    }
    let with = |n| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
        pool.install(|| score_submission(&gt, &sr).unwrap())
    };
    assert_eq!(with(1), with(4));
}

#[test]
fn problems_are_listed_in_scene_order() {
    let tmp = tempfile::tempdir().unwrap();
    let (gt, sr) = (tmp.path().join("gt"), tmp.path().join("sr"));
    hr_fixture(&gt, 3, 16, 16);
    let img = natural_image(16, 16, 0);
    write_pair(&sr, "0001", &img, &natural_image(16, 20, 0));
    write_pair(&sr, "0003", &img, &img);
    std::fs::remove_file(sr.join("0003_L.png")).unwrap();
    let Err(ScoreError::Submission(problems)) = score_submission(&gt, &sr) else {
        panic!("expected submission problems");
    };
    assert_eq!(
        problems,
        [
            SceneProblem::DimensionMismatch {
                stem: "0001_R".into(),
                expected: (16, 16),
                found: (16, 20)
            },
            SceneProblem::MissingScene { scene: "0002".into() },
            SceneProblem::MissingView { stem: "0003_L".into() },
        ]
    );
}

#[test]
fn empty_ground_truth() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(matches!(
        score_submission(tmp.path(), tmp.path()),
        Err(ScoreError::NoScenes(_))
    ));
}
