#include "selqa/parse_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "selqa/corpus.hpp"
#include "selqa/error.hpp"

namespace selqa {

namespace {

std::string sentence_key(const std::string& section_id, std::size_t sent_index) {
    return "S\t" + section_id + "\t" + std::to_string(sent_index);
}

std::string question_key(const std::string& question_id) { return "Q\t" + question_id; }

}  // namespace

DependencyTree::DependencyTree(std::vector<int> heads, std::vector<std::string> forms)
    : heads_(std::move(heads)), forms_(std::move(forms)) {
    const auto n = static_cast<int>(heads_.size());
    if (forms_.size() != heads_.size()) throw DataError("dependency tree: forms and heads differ in length");
    int roots = 0;
    for (int i = 0; i < n; ++i) {
        int h = heads_[i];
        if (h == kRoot) {
            ++roots;
        } else if (h < 0 || h >= n || h == i) {
            throw DataError("dependency tree: invalid head " + std::to_string(h) + " for token " + std::to_string(i));
        }
    }
    if (n > 0 && roots != 1) throw DataError("dependency tree: expected exactly one root, found " + std::to_string(roots));
    for (int i = 0; i < n; ++i) {
        int steps = 0;
        for (int cur = i; cur != kRoot; cur = heads_[cur]) {
            if (++steps > n) throw DataError("dependency tree: cycle through token " + std::to_string(i));
        }
    }
    for (auto& f : forms_) f = to_lower(f);
}

std::vector<std::size_t> DependencyTree::children(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
        if (heads_[k] == static_cast<int>(i)) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> DependencyTree::siblings(std::size_t i) const {
    std::vector<std::size_t> out;
    int h = heads_.at(i);
    if (h == kRoot) return out;
    for (std::size_t k = 0; k < heads_.size(); ++k) {
        if (k != i && heads_[k] == h) out.push_back(k);
    }
    return out;
}

void ParseBank::add_sentence(const std::string& section_id, std::size_t sent_index, DependencyTree tree) {
    trees_[sentence_key(section_id, sent_index)] = std::move(tree);
}

void ParseBank::add_question(const std::string& question_id, DependencyTree tree) {
    trees_[question_key(question_id)] = std::move(tree);
}

const DependencyTree* ParseBank::sentence(const std::string& section_id, std::size_t sent_index) const {
    auto it = trees_.find(sentence_key(section_id, sent_index));
    return it == trees_.end() ? nullptr : &it->second;
}

const DependencyTree* ParseBank::question(const std::string& question_id) const {
    auto it = trees_.find(question_key(question_id));
    return it == trees_.end() ? nullptr : &it->second;
}

ParseBank parse_parses(std::istream& in) {
    ParseBank bank;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::vector<int> heads;
    std::vector<std::string> forms;
    bool open = false;

    auto flush = [&]() {
        if (!open) return;
        DependencyTree tree(std::move(heads), std::move(forms));
        if (header.size() == 2) {
            bank.add_sentence(header[0], std::stoul(header[1]), std::move(tree));
        } else {
            bank.add_question(header[0], std::move(tree));
        }
        heads.clear();
        forms.clear();
        header.clear();
        open = false;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#') {
            flush();
            std::istringstream hs(line.substr(1));
            std::string field;
            while (hs >> field) header.push_back(field);
            if (header.empty() || header.size() > 2)
                throw DataError("parses line " + std::to_string(line_no) + ": expected `# section_id sent_index` or `# question_id`");
            if (header.size() == 2 && header[1].find_first_not_of("0123456789") != std::string::npos)
                throw DataError("parses line " + std::to_string(line_no) + ": sent_index must be a non-negative integer");
            open = true;
            continue;
        }
        if (!open) throw DataError("parses line " + std::to_string(line_no) + ": token line outside a block");
        std::istringstream ls(line);
        std::string idx, form, head;
        if (!std::getline(ls, idx, '\t') || !std::getline(ls, form, '\t') || !std::getline(ls, head, '\t'))
            throw DataError("parses line " + std::to_string(line_no) + ": expected three tab-separated fields");
        try {
            if (std::stoul(idx) != forms.size())
                throw DataError("parses line " + std::to_string(line_no) + ": token indices must be consecutive from 0");
            heads.push_back(std::stoi(head));
        } catch (const std::logic_error&) {
            throw DataError("parses line " + std::to_string(line_no) + ": non-numeric index");
        }
        forms.push_back(form);
    }
    flush();
    return bank;
}

ParseBank load_parses(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open parses file " + path);
    return parse_parses(in);
}

void write_parse_block(std::ostream& out, const std::string& header, const DependencyTree& tree) {
    out << "# " << header << '\n';
    for (std::size_t i = 0; i < tree.size(); ++i) out << i << '\t' << tree.forms()[i] << '\t' << tree.head(i) << '\n';
    out << '\n';
}

void EmbeddingTable::add(const std::string& token, std::span<const float> vec) {
    if (vec.size() != dim_)
        throw DataError("embedding for \"" + token + "\" has length " + std::to_string(vec.size()) + ", expected " +
                        std::to_string(dim_));
    if (index_.count(token)) return;
    index_.emplace(token, words_.size());
    words_.push_back(token);
    data_.insert(data_.end(), vec.begin(), vec.end());
}

std::optional<std::size_t> EmbeddingTable::row(std::string_view form) const {
    auto it = index_.find(std::string(form));
    if (it != index_.end()) return it->second;
    it = index_.find(to_lower(form));
    if (it != index_.end()) return it->second;
    return std::nullopt;
}

std::span<const float> EmbeddingTable::vector(std::size_t row) const {
    return std::span<const float>(data_).subspan(row * dim_, dim_);
}

EmbeddingTable parse_embeddings(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("embedding file is empty");
    std::istringstream hs(line);
    std::size_t vocab = 0, dim = 0;
    if (!(hs >> vocab >> dim) || dim == 0) throw DataError("embedding header must be `V dim`");
    EmbeddingTable table(dim);
    std::vector<float> vec(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string token;
        ls >> token;
        for (std::size_t d = 0; d < dim; ++d) {
            if (!(ls >> vec[d]))
                throw DataError("embedding line " + std::to_string(line_no) + ": expected " + std::to_string(dim) + " values");
        }
        table.add(token, vec);
    }
    if (table.size() != vocab)
        throw DataError("embedding header declares " + std::to_string(vocab) + " vectors, found " +
                        std::to_string(table.size()));
    return table;
}

EmbeddingTable load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embedding file " + path);
    return parse_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table) {
    out << table.size() << ' ' << table.dim() << '\n';
    out << std::setprecision(9);
    for (std::size_t r = 0; r < table.size(); ++r) {
        out << table.words()[r];
        for (float v : table.vector(r)) out << ' ' << v;
        out << '\n';
    }
}

}  // namespace selqa
