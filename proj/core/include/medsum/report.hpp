#pragma once

#include <string>
#include <vector>

#include "medsum/metrics.hpp"
#include "medsum/training.hpp"

namespace medsum {

// Deterministic float formatting for every CSV the project writes ("%.9g").
std::string format_number(double v);

// CSV header "epoch,train_loss,val_loss,rouge1,rouge2,rougeL,recall,lr".
std::string history_csv(const TrainHistory& history);

// CSV header "id,rouge1_p,rouge1_r,rouge1_f,rouge2_p,rouge2_r,rouge2_f,
// rougeL_p,rougeL_r,rougeL_f,recall".
std::string audit_csv(const std::vector<PairScore>& rows);

// CSV header "fold,val_loss,rouge1,rouge2,rougeL,recall"; k fold rows plus a
// final "mean" row.
std::string folds_csv(const CrossValResult& result);

// One comparison row per model variant, header
// "model,rouge1,rouge2,rougeL,recall" (F1 for the rouge columns).
struct CompareRow {
  std::string model;
  bool failed = false;
  std::string error;
  RougeReport report;
};
std::string compare_csv(const std::vector<CompareRow>& rows);

// Minimal line chart of the history columns (one polyline per metric), for
// the optional --plot flag.
std::string history_svg(const TrainHistory& history);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace medsum
