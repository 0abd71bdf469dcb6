"""Smoke test for the foodaug extension module.

Build and install first, e.g. `maturin develop` or
`maturin build --release && pip install target/wheels/foodaug-*.whl`.
"""

import math

import foodaug


def main():
    assert foodaug.clean_text("Beer <b>recall</b>&amp;  glass") == "Beer recall glass"

    tfidf = foodaug.Tfidf()
    rows = tfidf.fit_transform(["aa bb", "aa"])
    assert tfidf.idf("aa") == 1.0
    assert abs(tfidf.idf("bb") - (math.log(1.5) + 1.0)) < 1e-12
    for row in rows:
        assert abs(math.sqrt(sum(w * w for _, w in row)) - 1.0) < 1e-9

    train = foodaug.toy_corpus(240, 0, 1)
    test = foodaug.toy_corpus(80, 1000, 3)
    clf = foodaug.TextClassifier("lr", seed=2024)
    clf.fit([r["text"] for r in train], [r["hazard_category"] for r in train])
    pred = clf.predict([r["text"] for r in test])
    f1 = foodaug.f1_macro([r["hazard_category"] for r in test], pred)
    assert f1 > 0.8, f1
    proba = clf.predict_proba([test[0]["text"]])
    assert abs(sum(proba[0]) - 1.0) < 1e-9

    plan = foodaug.build_plan(train, "hazard", threshold=20, budget=12)
    assert all(sum(s["copies"] for s in c["sources"]) == 12 for c in plan["classes"])
    augmented = foodaug.augment(train, "hazard", "SR", seed=7, threshold=20, budget=12,
                                synonyms=foodaug.TOY_SYNONYMS)
    assert len(augmented) == len(train) + 12 * len(plan["classes"])
    again = foodaug.augment(train, "hazard", "SR", seed=7, threshold=20, budget=12,
                            synonyms=foodaug.TOY_SYNONYMS)
    assert augmented == again

    text = "possible glass fragments in beer bottles"
    assert sorted(foodaug.random_swap(text, 2, seed=3).split()) == sorted(text.split())
    assert len(foodaug.contextual_insert(text, ["urgent"], rate=0.2, seed=1).split()) == len(text.split()) + 2

    ht = ["a", "b", "a"]
    score = foodaug.task_score(ht, ["x", "y", "z"], ht, ["y", "z", "x"])
    assert score["combined"] == 0.5
    h, p = foodaug.kruskal_wallis([0.61, 0.62, 0.63], [0.71, 0.72, 0.73])
    assert abs(h - 3.8571) < 1e-3 and abs(p - 0.0495) < 1e-3
    g = foodaug.grouped_confusion(["a", "b", "b"], ["a", "a", "b"], {"a"})
    assert (g["minority_correct"], g["majority_correct"]) == (1, 1)

    try:
        foodaug.TextClassifier("nb", params={"class_weight": "balanced"})
    except ValueError:
        pass
    else:
        raise AssertionError("balanced weights accepted for naive Bayes")

    print("foodaug smoke test passed")


if __name__ == "__main__":
    main()
