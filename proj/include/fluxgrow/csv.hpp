#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace fluxgrow
{
    /// Shortest round-trippable text for a double (17 significant digits).
    inline std::string format_double(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    using CsvCell = std::variant<double, long long, std::string>;

    /// RFC-4180 style writer: header row first, fields quoted only when needed.
    class CsvWriter
    {
    public:
        CsvWriter(std::ostream& out, std::vector<std::string> header) : m_out(out), m_columns(header.size())
        {
            std::vector<CsvCell> cells(header.begin(), header.end());
            write_cells(cells);
        }

        void row(const std::vector<CsvCell>& cells)
        {
            if (cells.size() != m_columns)
                throw std::invalid_argument("CsvWriter: row has " + std::to_string(cells.size()) +
                                            " fields, header has " + std::to_string(m_columns));
            write_cells(cells);
        }

        static std::string quote(std::string_view field)
        {
            if (field.find_first_of(",\"\r\n") == std::string_view::npos)
                return std::string(field);
            std::string q = "\"";
            for (char c : field)
            {
                if (c == '"')
                    q += '"';
                q += c;
            }
            q += '"';
            return q;
        }

    private:
        void write_cells(const std::vector<CsvCell>& cells)
        {
            for (std::size_t i = 0; i < cells.size(); ++i)
            {
                if (i)
                    m_out << ',';
                std::visit(
                    [this](const auto& v) {
                        using T = std::decay_t<decltype(v)>;
                        if constexpr (std::is_same_v<T, double>)
                            m_out << format_double(v);
                        else if constexpr (std::is_same_v<T, long long>)
                            m_out << v;
                        else
                            m_out << quote(v);
                    },
                    cells[i]);
            }
            m_out << "\r\n";
        }

        std::ostream& m_out;
        std::size_t m_columns;
    };

    inline std::ofstream open_output(const std::string& path)
    {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw std::runtime_error("cannot open output file " + path);
        return out;
    }
} // namespace fluxgrow
