"""Skip-gram item embeddings trained on packs.

Packs act as sentences: items that share packs end up with nearby
vectors. On a corpus planted with two never-mixing item groups, the
learned space separates the groups cleanly, and a user's latest pack
(mean of its item vectors) retrieves in-group items.

Run:  python3 demos/04_item_embeddings.py
"""

import numpy as np

from ciprec.deepcip import TrainConfig, cip_vector, most_similar, train
from ciprec.synthetic import planted_clusters


def main() -> None:
    packs, group_a, group_b = planted_clusters(n_items=20, n_packs=500,
                                               seed=3)
    print(f"corpus: {len(packs)} packs over {len(group_a) + len(group_b)} "
          "items; groups never co-occur")
    print("    group A:", group_a)
    print("    group B:", group_b)

    model = train(packs, TrainConfig(dim=64, window=5, negatives=5,
                                     epochs=5, workers=1, seed=1))
    print("\nmean loss per epoch:",
          [round(loss, 3) for loss in model.epoch_losses])

    vec = model.syn0 / np.linalg.norm(model.syn0, axis=1, keepdims=True)

    def mean_cos(xs, ys, strict):
        vals = [float(vec[model.row[x]] @ vec[model.row[y]])
                for x in xs for y in ys if not strict or x < y]
        return sum(vals) / len(vals)

    intra = (mean_cos(group_a, group_a, True)
             + mean_cos(group_b, group_b, True)) / 2
    inter = mean_cos(group_a, group_b, False)
    print(f"mean cosine within groups {intra:.3f}, across groups "
          f"{inter:.3f} -> separation {intra - inter:.3f}")

    probe = group_a[0]
    print(f"\nnearest neighbors of item {probe} (all from group A):")
    for item, cos in most_similar(model, [probe], 5, exclude={probe}):
        print(f"    item {item:>2}  cosine {cos:.3f}")

    pack = [int(x) for x in packs[0][:3]]
    query = cip_vector(model, pack)
    sims = (model.syn0 @ query) / (
        np.linalg.norm(model.syn0, axis=1) * np.linalg.norm(query))
    ranked = [int(model.item_ids[r]) for r in np.argsort(-sims)
              if int(model.item_ids[r]) not in pack][:5]
    print(f"\nquerying with the pack {pack} (mean of its vectors) "
          f"suggests: {ranked}")


if __name__ == "__main__":
    main()
