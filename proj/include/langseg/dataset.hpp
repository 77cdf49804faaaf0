#pragma once

/**
 * @file dataset.hpp
 * @brief Dataset directories.
 *
 *     DIR/manifest.txt     one "<id> <domain> <classCount>" line per item
 *     DIR/<id>.pgm         image
 *     DIR/<id>_label.pgm   label ids
 */

#include <filesystem>
#include <sstream>
#include <string>

#include "langseg/io.hpp"
#include "langseg/phantom.hpp"

namespace langseg::io {

inline void writeDataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::filesystem::create_directories(dir);
    std::string manifest;
    for (const auto& it : ds.items) {
        writeImage(dir / (it.id + ".pgm"), it.image);
        writeMask(dir / (it.id + "_label.pgm"), it.label);
        manifest += it.id + " " + std::string(domainName(it.domain)) + " " + std::to_string(it.label.classCount()) + "\n";
    }
    writeFile(dir / "manifest.txt", manifest);
}

inline Dataset readDataset(const std::filesystem::path& dir) {
    std::string text = readFile(dir / "manifest.txt");
    Dataset ds;
    std::istringstream is(text);
    std::string line;
    int lineNo = 0;
    while (std::getline(is, line)) {
        ++lineNo;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string id, domain;
        int classes = 0;
        if (!(ls >> id >> domain >> classes))
            throw FormatError("manifest line " + std::to_string(lineNo) + ": expected '<id> <domain> <classCount>'");
        auto d = domainFromName(domain);
        if (!d) throw FormatError("manifest line " + std::to_string(lineNo) + ": unknown domain '" + domain + "'");
        if (id.find('/') != std::string::npos || id.find("..") != std::string::npos)
            throw FormatError("manifest line " + std::to_string(lineNo) + ": bad id '" + id + "'");
        DatasetItem item;
        item.id = id;
        item.domain = *d;
        item.image = readImage(dir / (id + ".pgm"));
        item.label = readLabels(dir / (id + "_label.pgm"), classes);
        requireSameShape(item.image, item.label, "dataset item " + id);
        ds.items.push_back(std::move(item));
    }
    return ds;
}

} // namespace langseg::io
