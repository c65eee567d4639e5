#include "medsum/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace medsum {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "epoch,train_loss,val_loss,rouge1,rouge2,rougeL,recall,lr\n";
  for (const auto& r : history.rows) {
    out += std::to_string(r.epoch) + ',' + format_number(r.train_loss) + ',' +
           format_number(r.val_loss) + ',' + format_number(r.rouge1) + ',' +
           format_number(r.rouge2) + ',' + format_number(r.rougeL) + ',' +
           format_number(r.recall) + ',' + format_number(r.lr) + '\n';
  }
  return out;
}

std::string audit_csv(const std::vector<PairScore>& rows) {
  std::string out =
      "id,rouge1_p,rouge1_r,rouge1_f,rouge2_p,rouge2_r,rouge2_f,"
      "rougeL_p,rougeL_r,rougeL_f,recall\n";
  for (const auto& s : rows) {
    out += s.id;
    for (const MetricTriple* t : {&s.rouge1, &s.rouge2, &s.rougeL}) {
      out += ',' + format_number(t->precision) + ',' + format_number(t->recall) + ',' +
             format_number(t->f1);
    }
    out += ',' + format_number(s.recall) + '\n';
  }
  return out;
}

std::string folds_csv(const CrossValResult& result) {
  std::string out = "fold,val_loss,rouge1,rouge2,rougeL,recall\n";
  auto row_line = [](const std::string& label, const FoldRow& r) {
    return label + ',' + format_number(r.val_loss) + ',' + format_number(r.rouge1) + ',' +
           format_number(r.rouge2) + ',' + format_number(r.rougeL) + ',' +
           format_number(r.recall) + '\n';
  };
  for (const auto& r : result.folds) {
    if (r.failed) {
      out += std::to_string(r.fold) + ",nan,nan,nan,nan,nan\n";
    } else {
      out += row_line(std::to_string(r.fold), r);
    }
  }
  out += row_line("mean", result.mean);
  return out;
}

std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = "model,rouge1,rouge2,rougeL,recall\n";
  for (const auto& r : rows) {
    if (r.failed) {
      out += r.model + ",nan,nan,nan,nan\n";
      continue;
    }
    out += r.model + ',' + format_number(r.report.rouge1.f1) + ',' +
           format_number(r.report.rouge2.f1) + ',' + format_number(r.report.rougeL.f1) +
           ',' + format_number(r.report.recall) + '\n';
  }
  return out;
}

std::string history_svg(const TrainHistory& history) {
  const int width = 640, height = 400, margin = 48;
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
      "\" height=\"" + std::to_string(height) + "\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (history.rows.empty()) return svg + "</svg>\n";

  struct Series {
    const char* name;
    const char* color;
    std::vector<double> values;
  };
  std::vector<Series> series = {{"train_loss", "#d62728", {}},
                                {"val_loss", "#9467bd", {}},
                                {"rouge1", "#1f77b4", {}},
                                {"rouge2", "#ff7f0e", {}},
                                {"rougeL", "#2ca02c", {}},
                                {"recall", "#8c564b", {}}};
  double vmax = 1e-9;
  for (const auto& r : history.rows) {
    series[0].values.push_back(r.train_loss);
    series[1].values.push_back(r.val_loss);
    series[2].values.push_back(r.rouge1);
    series[3].values.push_back(r.rouge2);
    series[4].values.push_back(r.rougeL);
    series[5].values.push_back(r.recall);
  }
  for (const auto& s : series) {
    for (double v : s.values) vmax = std::max(vmax, v);
  }
  const std::size_t n = history.rows.size();
  auto x_at = [&](std::size_t i) {
    return n == 1 ? width / 2.0
                  : margin + (width - 2.0 * margin) * static_cast<double>(i) / (n - 1);
  };
  auto y_at = [&](double v) { return height - margin - (height - 2.0 * margin) * v / vmax; };

  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" +
         std::to_string(height - margin) + "\" x2=\"" + std::to_string(width - margin) +
         "\" y2=\"" + std::to_string(height - margin) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + std::to_string(margin) + "\" y1=\"" + std::to_string(margin) +
         "\" x2=\"" + std::to_string(margin) + "\" y2=\"" +
         std::to_string(height - margin) + "\" stroke=\"black\"/>\n";

  int label_y = margin;
  for (const auto& s : series) {
    std::string points;
    for (std::size_t i = 0; i < n; ++i) {
      points += format_number(x_at(i)) + ',' + format_number(y_at(s.values[i])) + ' ';
    }
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(s.color) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    svg += "<text x=\"" + std::to_string(width - margin + 4) + "\" y=\"" +
           std::to_string(label_y) + "\" font-size=\"10\" fill=\"" + s.color + "\">" +
           s.name + "</text>\n";
    label_y += 12;
  }
  return svg + "</svg>\n";
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open \"" + path + "\" for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed while writing \"" + path + "\"");
}

}  // namespace medsum
