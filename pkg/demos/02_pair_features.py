"""The pair features behind relation classification.

Shows the subsumption score's behavior on planted counts, the yearly
feature layout, and fusion with an external language-model prediction.
"""

from ontogen import (
    PaperRecord,
    TopicLexicon,
    build_matcher,
    compute_features,
    compute_subsumption,
    count_occurrences,
    fuse,
)

# ---------------------------------------------------------------------------
# subsumption = coocc/occ_a - coocc/occ_b
#
# A specific topic almost always appears alongside its general parent, while
# the parent mostly appears without it. That asymmetry is the signal.
# ---------------------------------------------------------------------------

print("specific vs general:", compute_subsumption(100, 1000, 80))   # 0.72
print("general vs specific:", compute_subsumption(1000, 100, 80))   # -0.72
print("equal partners:     ", compute_subsumption(300, 300, 120))   # 0.0
print("never together:     ", compute_subsumption(50, 60, 0))       # 0.0

# ---------------------------------------------------------------------------
# features straight from a corpus
# ---------------------------------------------------------------------------

docs = []
for i in range(30):
    year = 2018 + i % 5
    if i % 3 == 0:
        text = "random forest models in machine learning pipelines"
    elif i % 3 == 1:
        text = "machine learning theory"
    else:
        text = "unrelated systems work"
    docs.append(PaperRecord(f"p{i}", "title", text, year))

lexicon = TopicLexicon.from_labels(["machine learning", "random forest"])
stats = count_occurrences(docs, build_matcher(lexicon), (2018, 2022), lexicon.ids())

agg = compute_features(("random forest", "machine learning"), stats)
print()
print("aggregate features:", agg)
# positive subsumption: "random forest" is the more specific of the pair

yearly = compute_features(("random forest", "machine learning"), stats, mode="yearly")
print("yearly blocks:", len(yearly.per_year), "-> flattened length", len(yearly.flat()))

# ---------------------------------------------------------------------------
# fusing with a language-model prediction (one-hot block, fixed order)
# ---------------------------------------------------------------------------

for lm in ("subtopic", None):
    vec = fuse(agg, lm)
    print(f"lm={lm!s:9s} onehot={vec.lm_onehot} schema={vec.schema_version}")
