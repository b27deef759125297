#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "llmad/retrieval.hpp"

using namespace llmad;
namespace fs = std::filesystem;

namespace {

LabeledSeries make_series(const std::string& id, std::size_t n, std::vector<std::size_t> spikes) {
    std::vector<double> v(n);
    std::vector<Label> l(n, 0);
    for (std::size_t i = 0; i < n; ++i) v[i] = 100 + 5 * std::sin(i * 0.1);
    for (auto s : spikes) {
        v[s] += 200;
        l[s] = 1;
    }
    return LabeledSeries(TimeSeries(id, v), l);
}

fs::path temp_dir(const std::string& tag) {
    auto p = fs::temp_directory_path() / ("llmad_rt_" + tag + "_" + std::to_string(std::random_device{}()));
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(BuildDatabases, RoutesWindowsByLabels) {
    // 1000 points, window 400 -> starts 0, 400, 800
    auto dbs = build_databases({make_series("s", 1000, {450})}, DatabaseOptions{400, 400, std::nullopt});
    EXPECT_EQ(dbs.normal.size(), 2u);
    EXPECT_EQ(dbs.anomalous.size(), 1u);
    EXPECT_EQ(dbs.anomalous.entries()[0].key, "s@400");
    EXPECT_EQ(dbs.normal.entries()[1].key, "s@800");
    EXPECT_EQ(dbs.normal.entries()[1].values.size(), 200u);
}

TEST(BuildDatabases, ScaledEntriesAreIntegers) {
    auto dbs = build_databases({make_series("s", 800, {10})}, 400, 400);
    ASSERT_TRUE(dbs.options.scaling.has_value());
    for (const auto* db : {&dbs.normal, &dbs.anomalous})
        for (const auto& e : db->entries())
            for (double v : e.values) EXPECT_EQ(v, std::floor(v));
}

TEST(BuildDatabases, RejectsEmptyAndMisfiledEntries) {
    EXPECT_THROW(build_databases({}, DatabaseOptions{}), InvalidArgument);
    RetrievalDatabase normal(EntryKind::Normal);
    EXPECT_THROW(normal.add(ReferenceEntry("k", {1, 2}, {0, 1})), InvalidArgument);
    normal.add(ReferenceEntry("k", {1, 2}, {0, 0}));
    EXPECT_THROW(normal.add(ReferenceEntry("k", {3, 4}, {0, 0})), InvalidArgument);
    EXPECT_THROW(ReferenceEntry("bad", {1, 2}, {0}), InvalidArgument);
}

TEST(Retrieve, NearestFirstTiesInInsertionOrder) {
    RetrievalDatabase db(EntryKind::Normal);
    db.add(ReferenceEntry("far", {50, 50, 50}, {0, 0, 0}));
    db.add(ReferenceEntry("near_a", {1, 2, 3}, {0, 0, 0}));
    db.add(ReferenceEntry("exact", {1, 2, 4}, {0, 0, 0}));
    db.add(ReferenceEntry("near_b", {1, 2, 5}, {0, 0, 0}));
    std::vector<double> q{1, 2, 4};
    auto hits = retrieve(db, q, 3);
    ASSERT_EQ(hits.size(), 3u);
    EXPECT_EQ(hits[0].entry->key, "exact");
    EXPECT_EQ(hits[1].entry->key, "near_a");
    EXPECT_EQ(hits[2].entry->key, "near_b");
    EXPECT_DOUBLE_EQ(hits[1].distance.distance, hits[2].distance.distance);
    EXPECT_TRUE(retrieve(db, q, 0).empty());
    EXPECT_EQ(retrieve(db, q, 10).size(), 4u);
    EXPECT_TRUE(retrieve(RetrievalDatabase{}, q, 2).empty());
}

TEST(Retrieve, DistancesAscending) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 100);
    RetrievalDatabase db;
    for (int i = 0; i < 30; ++i) {
        std::vector<double> v(20 + i % 7);
        for (auto& x : v) x = u(rng);
        db.add(ReferenceEntry("e" + std::to_string(i), v, std::vector<Label>(v.size(), 0)));
    }
    std::vector<double> q(25);
    for (auto& x : q) x = u(rng);
    auto hits = retrieve(db, q, 30);
    for (std::size_t i = 1; i < hits.size(); ++i)
        EXPECT_LE(hits[i - 1].distance.distance, hits[i].distance.distance);
}

TEST(Persistence, RoundTripsEntriesAndOptions) {
    auto dir = temp_dir("save");
    DatabasePair dbs = build_databases({make_series("a", 900, {5, 6}), make_series("b", 400, {})},
                                       DatabaseOptions{300, 150, ScalingOptions{0.9, 0.1, 500}});
    save_databases(dbs, dir);
    EXPECT_TRUE(fs::exists(dir / "index.tsv"));
    EXPECT_TRUE(fs::exists(dir / "preprocessing.json"));
    auto back = load_databases(dir);
    ASSERT_EQ(back.normal.size(), dbs.normal.size());
    ASSERT_EQ(back.anomalous.size(), dbs.anomalous.size());
    for (std::size_t i = 0; i < dbs.normal.size(); ++i) {
        EXPECT_EQ(back.normal.entries()[i].key, dbs.normal.entries()[i].key);
        EXPECT_EQ(back.normal.entries()[i].values, dbs.normal.entries()[i].values);
    }
    EXPECT_EQ(back.anomalous.entries()[0].labels, dbs.anomalous.entries()[0].labels);
    EXPECT_EQ(back.options.window_len, 300u);
    EXPECT_EQ(back.options.stride, 150u);
    ASSERT_TRUE(back.options.scaling.has_value());
    EXPECT_EQ(*back.options.scaling, (ScalingOptions{0.9, 0.1, 500}));
    fs::remove_all(dir);
}

TEST(Persistence, RawValuesSurviveExactly) {
    auto dir = temp_dir("raw");
    DatabasePair dbs;
    dbs.options.scaling.reset();
    dbs.normal.add(ReferenceEntry("x", {0.1, -1e-7, 3.141592653589793, 12345678.5}, {0, 0, 0, 0}));
    dbs.anomalous.add(ReferenceEntry("y", {1, 2.5}, {0, 1}));
    save_databases(dbs, dir);
    std::ifstream f(dir / "anomalous" / "000000.txt");
    std::string body((std::istreambuf_iterator<char>(f)), {});
    EXPECT_EQ(body, "1\n*2.5*\n");
    auto back = load_databases(dir);
    EXPECT_EQ(back.normal.entries()[0].values, dbs.normal.entries()[0].values);
    EXPECT_FALSE(back.options.scaling.has_value());
    fs::remove_all(dir);
}

TEST(Persistence, MissingOrCorruptDirectory) {
    auto dir = temp_dir("bad");
    EXPECT_THROW(load_databases(dir), DataError);
    fs::create_directories(dir);
    EXPECT_THROW(load_databases(dir), DataError);
    std::ofstream(dir / "index.tsv") << "only-a-key\n";
    EXPECT_THROW(load_databases(dir), DataError);
    std::ofstream(dir / "index.tsv") << "k\tnormal\tnormal/000000.txt\n";
    fs::create_directories(dir / "normal");
    std::ofstream(dir / "normal" / "000000.txt") << "1\n*2*\n";
    EXPECT_THROW(load_databases(dir), DataError);
    fs::remove_all(dir);
}
