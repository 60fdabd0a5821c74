#include "dop/oracle.hpp"

#include <cstddef>

namespace dop {

namespace {

struct Leaf {
  bool word;
  std::string label;
};

struct Option {
  std::vector<Leaf> frontier;
  double prob;
  const Tree* shape;
};

void frontier_of(const Tree& t, std::vector<Leaf>& out, bool root) {
  if (t.terminal) {
    out.push_back({true, t.label});
  } else if (t.is_leaf() && !root) {
    out.push_back({false, t.label});
  } else {
    for (const Tree& c : t.children) frontier_of(c, out, false);
  }
}

// Rebuilds a tree by expanding each site, in pre-order, with the next shape.
Tree expand(const Tree& shape, const std::vector<const Tree*>& steps, std::size_t& next) {
  Tree out;
  out.label = shape.label;
  out.terminal = shape.terminal;
  for (const Tree& c : shape.children) {
    if (!c.terminal && c.children.empty())
      out.children.push_back(expand(*steps[next++], steps, next));
    else
      out.children.push_back(expand(c, steps, next));
  }
  return out;
}

class Search {
 public:
  Search(const std::vector<std::string>& sentence, const ProbabilityModel& model,
         std::uint64_t ceiling)
      : sentence_(sentence), ceiling_(ceiling) {
    std::size_t labels = 0;
    for (const WeightedFragment& wf : model.fragments) {
      Option o{{}, wf.prob, &wf.fragment.shape};
      frontier_of(wf.fragment.shape, o.frontier, true);
      auto& list = options_[wf.fragment.root()];
      if (list.empty()) ++labels;
      list.push_back(std::move(o));
    }
    max_steps_ = 2 * (sentence.size() + 1) * (labels + 1);
  }

  void run(const std::string& start, OracleResult& result) {
    result_ = &result;
    pending_.assign(1, {false, start});
    dfs(0, 1.0);
  }

 private:
  void dfs(std::size_t pos, double prob) {
    if (++work_ > ceiling_)
      throw OracleInfeasible("composition search exceeded " + std::to_string(ceiling_) + " steps");
    if (pending_.empty()) {
      if (pos == sentence_.size()) record(prob);
      return;
    }
    Leaf top = pending_.back();
    pending_.pop_back();
    if (top.word) {
      if (pos < sentence_.size() && sentence_[pos] == top.label) dfs(pos + 1, prob);
    } else if (auto it = options_.find(top.label); it != options_.end()) {
      if (steps_.size() >= max_steps_)
        throw OracleInfeasible("derivation longer than " + std::to_string(max_steps_) +
                               " steps; the fragment set has a unary cycle");
      const std::size_t remaining = sentence_.size() - pos;
      for (const Option& o : it->second) {
        if (pending_.size() + o.frontier.size() > remaining) continue;
        for (auto leaf = o.frontier.rbegin(); leaf != o.frontier.rend(); ++leaf)
          pending_.push_back(*leaf);
        steps_.push_back(o.shape);
        dfs(pos, prob * o.prob);
        steps_.pop_back();
        pending_.resize(pending_.size() - o.frontier.size());
      }
    }
    pending_.push_back(top);
  }

  void record(double prob) {
    std::size_t next = 1;
    Tree t = expand(*steps_.front(), steps_, next);
    std::string text = write_bracketed(t);
    result_->tree_probs[text] += prob;
    trees_.try_emplace(std::move(text), std::move(t));
    ++result_->derivations;
  }

  const std::vector<std::string>& sentence_;
  std::uint64_t ceiling_;
  std::uint64_t work_ = 0;
  std::size_t max_steps_ = 0;
  std::map<std::string, std::vector<Option>> options_;
  std::vector<Leaf> pending_;
  std::vector<const Tree*> steps_;
  OracleResult* result_ = nullptr;

 public:
  std::map<std::string, Tree> trees_;
};

}  // namespace

OracleResult brute_force_mpp(const std::vector<std::string>& sentence,
                             const ProbabilityModel& model, std::uint64_t ceiling) {
  OracleResult result;
  if (sentence.empty()) return result;
  Search search(sentence, model, ceiling);
  for (const std::string& s : model.start_labels) search.run(s, result);
  auto pick = first_near_max(result.tree_probs, [](const auto& e) { return e.second; });
  if (pick >= 0) {
    auto it = std::next(result.tree_probs.begin(), pick);
    result.prob = it->second;
    result.tree = search.trees_.at(it->first);
  }
  return result;
}

}  // namespace dop
