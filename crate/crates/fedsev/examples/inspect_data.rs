//! Load the bundled smoke dataset and look at folds and client partitions.
//!
//! Run with: cargo run --example inspect_data

use fedsev::data::{
    make_stratified_folds, partition_dirichlet, partition_iid, CsvOptions, Dataset,
};

fn main() -> fedsev::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/smoke.csv");
    let ds = Dataset::from_csv(path, &CsvOptions::default())?;
    println!(
        "{} rows, {} features, {} classes, class counts {:?}",
        ds.n_rows(),
        ds.n_features(),
        ds.n_classes(),
        ds.class_counts()
    );

    let plan = make_stratified_folds(&ds, 5, 42)?;
    println!("\nstratified 5-fold test splits (seed 42):");
    for fold in 0..plan.k {
        let test = plan.test_indices(fold);
        let mut counts = vec![0usize; ds.n_classes()];
        for &i in &test {
            counts[ds.labels()[i]] += 1;
        }
        println!("  fold {fold}: {} rows, per class {:?}", test.len(), counts);
    }

    let rows: Vec<usize> = (0..ds.n_rows()).collect();
    let iid = partition_iid(&rows, ds.labels(), 3, 7)?;
    println!("\nIID partition across 3 clients:");
    for (client, counts) in iid
        .class_table(ds.labels(), ds.n_classes())
        .iter()
        .enumerate()
    {
        println!("  client {client}: {:?}", counts);
    }

    let dirichlet = partition_dirichlet(&rows, ds.labels(), 3, 1.0, 7)?;
    println!("\nDirichlet(alpha = 1) partition across 3 clients:");
    for (client, counts) in dirichlet
        .class_table(ds.labels(), ds.n_classes())
        .iter()
        .enumerate()
    {
        println!("  client {client}: {:?}", counts);
    }

    println!("\npartition JSON for audit:");
    println!("{}", serde_json::to_string(&iid).unwrap());
    Ok(())
}
