//! Embedding-based diversity and the binary embedding store.

use divcurate::semdiv::{aut_distance, dsi, unique_ratio, write_store, EmbeddingMatrix, EmbeddingStore};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let story = EmbeddingMatrix::from_rows(
        "story-1",
        &[vec![0.9, 0.1, 0.0], vec![0.1, 0.8, 0.2], vec![0.0, 0.3, 0.9], vec![0.7, 0.7, 0.1]],
    )?;
    println!("DSI of story-1: {:.4}", dsi(&story)?);

    let uses = EmbeddingMatrix::from_rows("brick-uses", &[vec![1.0, 0.2, 0.0], vec![0.1, 1.0, 0.4]])?;
    println!("object/use distance: {:.4}", aut_distance(&[1.0, 0.0, 0.0], &uses)?);

    let answers = ["Paris", "paris ", "Lyon", "Marseille"];
    println!("unique ratio (normalized): {:.2}", unique_ratio(&answers, true)?);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("embeddings.dvem");
    write_store(&path, &[story, uses])?;
    let store = EmbeddingStore::open(&path)?;
    println!("store holds {} matrices of {} dims: {:?}", store.len(), store.dims(), store.keys().collect::<Vec<_>>());
    println!("reloaded DSI: {:.4}", dsi(&store.load("story-1")?)?);
    Ok(())
}
