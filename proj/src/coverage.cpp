#include "rankfolio/coverage.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "rankfolio/common.hpp"

namespace rankfolio {

std::optional<double> ranking_error(const BtRanking& r, const Vote& v) {
    if (!v.decisive()) {
        throw ValidationError("ranking_error needs a decisive vote (id " + std::to_string(v.id) + ")");
    }
    const auto sw = r.score(v.winner());
    const auto sl = r.score(v.loser());
    if (!sw || !sl) return std::nullopt;
    return sigmoid(*sl - *sw);  // probability mass on the observed loser
}

namespace {

void fill_rows(const std::span<const NamedRanking>& rankings, const std::span<const Vote>& votes,
               ErrorMatrix& em, std::size_t row_offset, unsigned workers) {
    const std::size_t m = rankings.size();
    parallel_for(votes.size(), workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const Vote& v = votes[i];
            for (std::size_t j = 0; j < m; ++j) {
                const auto e = ranking_error(rankings[j].ranking, v);
                em.set(row_offset + i, j,
                       e ? static_cast<float>(*e) : ErrorMatrix::missing_value());
            }
        }
    });
}

void check_inputs(std::span<const NamedRanking> rankings, std::span<const Vote> votes) {
    if (rankings.empty()) throw ValidationError("error matrix needs at least one ranking");
    std::map<std::string, int> seen;
    for (const NamedRanking& r : rankings) {
        if (++seen[r.name] > 1) throw ValidationError("duplicate ranking name: " + r.name);
    }
    for (const Vote& v : votes) {
        if (!v.decisive()) {
            throw ValidationError("error matrix rows must be decisive votes (id " +
                                  std::to_string(v.id) + ")");
        }
    }
}

}  // namespace

ErrorMatrix build_error_matrix(std::span<const NamedRanking> rankings,
                               std::span<const Vote> votes, unsigned workers) {
    check_inputs(rankings, votes);
    ErrorMatrix em;
    em.model_ids.reserve(rankings.size());
    for (const NamedRanking& r : rankings) em.model_ids.push_back(r.name);
    em.item_ids.reserve(votes.size());
    for (const Vote& v : votes) em.item_ids.push_back(v.id);
    em.err.assign(votes.size() * rankings.size(), 0.0f);
    fill_rows(rankings, votes, em, 0, workers);
    return em;
}

double coverage_fraction(const ErrorMatrix& em, std::span<const std::string> selected,
                         double lambda) {
    if (em.n_items() == 0) return 0.0;
    std::vector<std::size_t> cols;
    for (const std::string& s : selected) {
        const auto it = std::find(em.model_ids.begin(), em.model_ids.end(), s);
        if (it == em.model_ids.end()) throw ValidationError("selection names unknown column: " + s);
        cols.push_back(static_cast<std::size_t>(it - em.model_ids.begin()));
    }
    std::int64_t covered = 0;
    for (std::size_t i = 0; i < em.n_items(); ++i) {
        for (std::size_t j : cols) {
            if (covers_entry(em.at(i, j), lambda)) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / static_cast<double>(em.n_items());
}

std::vector<std::pair<double, double>> coverage_curve(const ErrorMatrix& em,
                                                      std::span<const std::string> selected,
                                                      std::span<const double> lambdas) {
    std::vector<std::pair<double, double>> out;
    out.reserve(lambdas.size());
    for (double l : lambdas) out.emplace_back(l, coverage_fraction(em, selected, l));
    return out;
}

namespace {

constexpr char kMagic[8] = {'R', 'F', 'E', 'M', 'A', 'T', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
    char buf[8];
    in.read(buf, 8);
    if (!in) throw IoError("truncated error matrix");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
}

void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
    const std::uint64_t n = read_u64(in);
    if (n > (1u << 20)) throw IoError("implausible string length in error matrix");
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    if (!in) throw IoError("truncated error matrix");
    return s;
}

void write_header(std::ostream& out, std::span<const std::int64_t> item_ids,
                  std::span<const std::string> model_ids) {
    out.write(kMagic, 8);
    write_u64(out, item_ids.size());
    write_u64(out, model_ids.size());
    for (std::int64_t id : item_ids) write_u64(out, static_cast<std::uint64_t>(id));
    for (const std::string& m : model_ids) write_string(out, m);
}

void write_row_block(std::ostream& out, const float* data, std::size_t count) {
    static_assert(sizeof(float) == 4);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, data + i, 4);
        char buf[4];
        for (int b = 0; b < 4; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xff);
        out.write(buf, 4);
    }
}

}  // namespace

void write_error_matrix(const ErrorMatrix& em, std::ostream& out) {
    write_header(out, em.item_ids, em.model_ids);
    write_row_block(out, em.err.data(), em.err.size());
    if (!out) throw IoError("failed writing error matrix");
}

ErrorMatrix read_error_matrix(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) throw IoError("not an error matrix file");
    ErrorMatrix em;
    const std::uint64_t n = read_u64(in), m = read_u64(in);
    if (m == 0) throw IoError("error matrix has zero columns");
    em.item_ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) em.item_ids.push_back(static_cast<std::int64_t>(read_u64(in)));
    em.model_ids.reserve(m);
    for (std::uint64_t j = 0; j < m; ++j) em.model_ids.push_back(read_string(in));
    em.err.resize(n * m);
    for (std::size_t i = 0; i < em.err.size(); ++i) {
        char buf[4];
        in.read(buf, 4);
        if (!in) throw IoError("truncated error matrix");
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
        float f;
        std::memcpy(&f, &bits, 4);
        em.err[i] = f;
    }
    return em;
}

ErrorMatrix read_error_matrix_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open error matrix: " + path);
    return read_error_matrix(in);
}

void write_error_matrix_file(const ErrorMatrix& em, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write error matrix: " + path);
    write_error_matrix(em, out);
}

void write_error_matrix_streamed(std::span<const NamedRanking> rankings,
                                 std::span<const Vote> votes, const std::string& path,
                                 std::size_t chunk_rows, unsigned workers) {
    check_inputs(rankings, votes);
    if (chunk_rows == 0) throw ValidationError("chunk_rows must be >= 1");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write error matrix: " + path);

    std::vector<std::int64_t> item_ids;
    item_ids.reserve(votes.size());
    for (const Vote& v : votes) item_ids.push_back(v.id);
    std::vector<std::string> model_ids;
    for (const NamedRanking& r : rankings) model_ids.push_back(r.name);
    write_header(out, item_ids, model_ids);

    ErrorMatrix chunk;
    chunk.model_ids = model_ids;
    for (std::size_t start = 0; start < votes.size(); start += chunk_rows) {
        const std::size_t rows = std::min(chunk_rows, votes.size() - start);
        chunk.item_ids.assign(item_ids.begin() + static_cast<std::ptrdiff_t>(start),
                              item_ids.begin() + static_cast<std::ptrdiff_t>(start + rows));
        chunk.err.assign(rows * model_ids.size(), 0.0f);
        fill_rows(rankings, votes.subspan(start, rows), chunk, 0, workers);
        write_row_block(out, chunk.err.data(), chunk.err.size());
    }
    if (!out) throw IoError("failed writing error matrix");
}

void write_error_matrix_csv(const ErrorMatrix& em, std::ostream& out) {
    out << "item_id";
    for (const std::string& m : em.model_ids) out << ',' << m;
    out << "\n";
    std::ostringstream cell;
    cell.setf(std::ios::fixed);
    cell.precision(6);
    for (std::size_t i = 0; i < em.n_items(); ++i) {
        out << em.item_ids[i];
        for (std::size_t j = 0; j < em.n_models(); ++j) {
            out << ',';
            const float v = em.at(i, j);
            if (!ErrorMatrix::is_missing(v)) {
                cell.str("");
                cell << v;
                out << cell.str();
            }
        }
        out << "\n";
    }
}

}  // namespace rankfolio
