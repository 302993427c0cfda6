use mpolsr::batch::{render_csv, run_batch, BatchRow, CSV_HEADER};
use mpolsr::sim::{run, Scenario, Variant};

fn base() -> Scenario {
    Scenario::parse(
        "node_count = 12\narea_width_m = 400\narea_height_m = 400\n\
         duration_s = 30\nwarmup_s = 10\ncbr_flows = 3\n",
    )
    .unwrap()
}

#[test]
fn cross_product_cardinality_and_order() {
    let variants = [Variant::ReMpolsr, Variant::OlsrFb];
    let rows = run_batch(&base(), &variants, &[8.0, 2.0], &[3, 1, 2]).unwrap();
    assert_eq!(rows.len(), 12);
    let keys: Vec<(Variant, f64, u64)> = rows.iter().map(|r| (r.variant, r.max_speed_mps, r.seed)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    assert_eq!(keys, sorted);
    let csv = render_csv(&rows).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
    assert!(lines.all(|l| l.split(',').count() == CSV_HEADER.len()));
}

#[test]
fn repeated_sweep_is_byte_identical() {
    let go = || {
        let rows = run_batch(&base(), &[Variant::Olsr, Variant::MdcMpolsr], &[4.0], &[1, 2]).unwrap();
        render_csv(&rows).unwrap()
    };
    assert_eq!(go(), go());
}

#[test]
fn row_matches_single_run() {
    let rows = run_batch(&base(), &[Variant::SrMpolsr], &[6.0], &[9]).unwrap();
    let mut single = base().with_max_speed(6.0);
    single.variant = Variant::SrMpolsr;
    single.seed = 9;
    let expected = BatchRow {
        variant: Variant::SrMpolsr,
        max_speed_mps: 6.0,
        seed: 9,
        report: run(&single).unwrap(),
    };
    assert_eq!(rows[0], expected);
    assert_eq!(rows[0].record(), expected.record());
}

#[test]
fn undefined_metrics_are_empty_fields() {
    let mut s = base();
    s.tx_range_m = 1.0;
    let rows = run_batch(&s, &[Variant::Olsr], &[0.0], &[1]).unwrap();
    let rec = rows[0].record();
    assert_eq!(rec[5], "0.000000");
    assert_eq!(rec[6], "");
    assert_eq!(rec[7], "");
    assert_eq!(rec[8], "");
}
