"""Example usage of the chordlab package"""

from chordlab import (
    ACEAnalyzer,
    analyze,
    build_dense_model,
    class_of,
    parse_lab,
    score,
    train,
)
from chordlab.analyzer import align_errors
from chordlab.dataset import split_dataset, synth_dataset
from chordlab.distances import distance
from chordlab.evaluation import EvalVocabulary, parse_key_lab
from chordlab.learner import TrainConfig, accuracy
from chordlab.similarity import similarity_for

REFERENCE = """0.0 2.0 C:maj
2.0 4.0 A:min7
4.0 6.0 F:maj
6.0 8.0 G:7
"""

ESTIMATE = """0.0 2.0 C:maj
2.0 4.0 C:maj
4.0 6.0 D:min
6.0 8.0 C#:7
"""


def main():
    """Run example distance, training and analysis steps"""

    print("=" * 70)
    print("chordlab examples")
    print("=" * 70)

    # Example 1: chord distances
    print("\nExample 1: distances from C:maj in A0")
    print("-" * 70)
    c_major = class_of("C:maj", "A0")
    for other in ("A:min", "E:min", "F:maj", "F#:maj"):
        chord = class_of(other, "A0")
        print(
            f"{other:<8} D1: {distance('D1', c_major, chord):.0f}   "
            f"D2: {distance('D2', c_major, chord):.3f}"
        )

    # Example 2: one-hot against similarity-weighted training
    print("\nExample 2: training on synthetic chroma (A1)")
    print("-" * 70)
    dataset = synth_dataset("A1", 10, noise_std=0.2, seed=0)
    train_set, val_set, test_set = split_dataset(dataset, seed=0)
    config = TrainConfig.desk(max_epochs=100)
    for kind in ("D0", "D1", "D2"):
        model = build_dense_model("A1", seed=0)
        similarity = None if kind == "D0" else similarity_for(kind, "A1")
        state = train(model, train_set, similarity, config, val_set)
        print(
            f"{kind}: best epoch {state.best_epoch:>3}, "
            f"test accuracy {accuracy(model, test_set):.1%}"
        )

    # Example 3: scoring and explaining errors
    print("\nExample 3: recall and error analysis")
    print("-" * 70)
    reference = parse_lab(REFERENCE, name="demo")
    estimate = parse_lab(ESTIMATE)
    for vocab in EvalVocabulary:
        recall = score(reference, estimate, vocab).recall
        print(f"{vocab.value:<9} {recall:.1%}")

    keys = parse_key_lab("0.0 8.0 C:major\n")
    report = analyze(align_errors(reference, estimate, keys))
    ACEAnalyzer().print_report(report)


if __name__ == "__main__":
    main()
