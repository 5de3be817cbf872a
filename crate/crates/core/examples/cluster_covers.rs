//! A small binary cluster tree and the minimal admissible cover of its
//! last leaf, printed as an indented dump.
use fracdg::clustering::Lifetimes;
use fracdg::{ClusterTree, TimeMesh};

fn main() -> fracdg::Result<()> {
    let mesh = TimeMesh::uniform(16, 16.0)?;
    let tree = ClusterTree::build_uniform(&mesh, 2, 4)?;
    let eta = 1.0;
    let leaf = tree.leaves().end - 1;
    let cover = tree.minimal_cover(leaf, eta);
    print!("{}", tree.dump(Some(&cover)));
    println!("near: {}, far: {}", cover.near.len(), cover.far.len());
    let life = Lifetimes::scan(&tree, eta)?;
    for &id in &cover.far {
        println!("{} is in the cover for steps {:?}", tree.cluster(id), life.get(id).unwrap());
    }
    Ok(())
}
