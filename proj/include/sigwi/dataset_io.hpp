#ifndef SIGWI_DATASET_IO_HPP
#define SIGWI_DATASET_IO_HPP

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "sigwi/detail.hpp"
#include "sigwi/errors.hpp"
#include "sigwi/types.hpp"

namespace sigwi {

inline const char* to_string(SignatureKind k) {
    return k == SignatureKind::genuine ? "genuine" : "skilled";
}

/// Row format: writer_id,kind,f0,...,f{D-1} with kind in {genuine, skilled}.
inline void save_dataset_csv(const WriterSet& ws, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path + " for writing");
    const std::size_t dim = ws.dim();
    f << "writer_id,kind";
    for (std::size_t d = 0; d < dim; ++d) f << ",f" << d;
    f << '\n';
    for (int id : ws.writer_ids()) {
        for (const auto& rec : ws.records_of(id)) {
            f << id << ',' << to_string(rec.kind);
            for (double v : rec.features) f << ',' << detail::format_double(v);
            f << '\n';
        }
    }
    if (!f) throw IoError("write failed for " + path);
}

inline WriterSet load_dataset_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw IoError(path + ": empty file");
    auto header = detail::split_csv_line(line);
    if (header.size() < 3 || header[0] != "writer_id" || header[1] != "kind")
        throw IoError(path + ": unexpected header");
    const std::size_t dim = header.size() - 2;

    WriterSet ws;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != dim + 2)
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(dim + 2) + " cells, got " + std::to_string(cells.size()));
        SignatureRecord rec;
        try {
            rec.writer_id = std::stoi(cells[0]);
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": bad writer_id '" + cells[0] +
                          "'");
        }
        if (cells[1] == "genuine") rec.kind = SignatureKind::genuine;
        else if (cells[1] == "skilled") rec.kind = SignatureKind::skilled_forgery;
        else
            throw IoError(path + ":" + std::to_string(line_no) + ": bad kind '" + cells[1] + "'");
        rec.features.reserve(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            try {
                rec.features.push_back(std::stod(cells[d + 2]));
            } catch (const std::exception&) {
                throw IoError(path + ":" + std::to_string(line_no) + ": bad value '" +
                              cells[d + 2] + "'");
            }
        }
        ws.add(std::move(rec));
    }
    ws.validate();
    return ws;
}

} // namespace sigwi

#endif
